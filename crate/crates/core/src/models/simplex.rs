use serde::{Deserialize, Serialize};

use super::{finite_ppp, FinitePosterior, GenerativeModel, Posterior};
use crate::error::{Error, Result};
use crate::numerics::RngStream;

/// Two overlapping uniform components on the unit interval (the 1-simplex).
///
/// x | θ=0 ~ U[0, 1/2 + β) and x | θ=1 ~ U(1/2 − β, 1], with discrepancy
/// |x − θ|, the distance to the component's corner. Inside the overlap the
/// posterior is flat and P collapses to a single value, which makes the law
/// of P equal to 𝒫_{2a} with a = β / (1/2 + β).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimplexModel {
    half_width: f64,
}

impl SimplexModel {
    /// Components overlapping on (1/2 − β, 1/2 + β).
    pub fn with_half_width(half_width: f64) -> Result<Self> {
        if !(half_width > 0.0 && half_width < 0.5) {
            return Err(Error::domain(format!("half-width must lie in (0, 1/2), got {half_width}")));
        }
        Ok(Self { half_width })
    }

    /// The overlap that puts the atom of P at `alpha`: β = α / (2(1 − α)).
    pub fn achieving(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 0.5) {
            return Err(Error::domain(format!("simplex model needs alpha in (0, 1/2), got {alpha}")));
        }
        Self::with_half_width(0.5 * alpha / (1.0 - alpha))
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// Location of the atom of P.
    pub fn atom(&self) -> f64 {
        self.half_width / (0.5 + self.half_width)
    }

    fn component_width(&self) -> f64 {
        0.5 + self.half_width
    }

    fn density(&self, theta: usize, x: f64) -> f64 {
        let inside = match theta {
            0 => (0.0..self.component_width()).contains(&x),
            _ => x > 0.5 - self.half_width && x <= 1.0,
        };
        if inside {
            1.0 / self.component_width()
        } else {
            0.0
        }
    }
}

impl GenerativeModel for SimplexModel {
    type Param = usize;
    type Data = f64;

    fn name(&self) -> String {
        format!("simplex(half_width={})", self.half_width)
    }

    fn sample_prior(&self, rng: &mut RngStream) -> usize {
        usize::from(rng.uniform() >= 0.5)
    }

    fn sample_data(&self, theta: usize, rng: &mut RngStream) -> f64 {
        let w = self.component_width();
        match theta {
            0 => rng.uniform() * w,
            _ => 1.0 - rng.uniform() * w,
        }
    }

    fn discrepancy(&self, x: f64, theta: usize) -> f64 {
        (x - theta as f64).abs()
    }

    fn conditional_sf(&self, theta: usize, x: f64) -> f64 {
        let w = self.component_width();
        // the distance to the corner is uniform on [0, w) under either component
        ((w - self.discrepancy(x, theta)) / w).clamp(0.0, 1.0)
    }

    fn sample_posterior(&self, x: f64, rng: &mut RngStream) -> usize {
        self.posterior(x).sample(rng)
    }

    fn exact_ppp(&self, x: f64) -> f64 {
        finite_ppp(self, x)
    }

    fn known_atoms(&self) -> Vec<f64> {
        vec![self.atom()]
    }
}

impl FinitePosterior for SimplexModel {
    fn posterior(&self, x: f64) -> Posterior<usize> {
        Posterior::from_weights(vec![0, 1], vec![self.density(0, x), self.density(1, x)])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn discrepancy_is_distance_to_corner() {
        let m = SimplexModel::achieving(0.1).unwrap();
        assert!((m.discrepancy(0.3, 1) - 0.7).abs() < 1e-15);
    }

    #[test]
    fn posterior_in_overlap() {
        let m = SimplexModel::achieving(0.1).unwrap();
        assert_eq!(m.posterior(0.5).weights, vec![0.5, 0.5]);
        assert_eq!(m.posterior(0.1).weights, vec![1.0, 0.0]);
    }

    #[test]
    fn boundary_conventions() {
        let m = SimplexModel::with_half_width(0.1).unwrap();
        // 0.6 = 1/2 + β is outside [0, 0.6) but inside (0.4, 1]
        assert_eq!(m.posterior(0.6).weights, vec![0.0, 1.0]);
        assert_eq!(m.posterior(0.4).weights, vec![1.0, 0.0]);
    }

    #[test]
    fn atom_location() {
        let m = SimplexModel::achieving(0.1).unwrap();
        assert!((m.atom() - 0.1).abs() < 1e-15);
        assert!((m.exact_ppp(0.5) - 0.1).abs() < 1e-15);
        let literal = SimplexModel::with_half_width(0.1).unwrap();
        assert!((literal.atom() - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn ppp_is_continuous_at_overlap_edges() {
        let m = SimplexModel::achieving(0.2).unwrap();
        let lo = 0.5 - m.half_width();
        assert!((m.exact_ppp(lo) - 2.0 * m.atom()).abs() < 1e-12);
        assert!((m.exact_ppp(lo + 1e-9) - m.atom()).abs() < 1e-12);
    }

    #[test]
    fn domain() {
        assert!(SimplexModel::achieving(0.6).is_err());
        assert!(SimplexModel::with_half_width(0.0).is_err());
    }
}

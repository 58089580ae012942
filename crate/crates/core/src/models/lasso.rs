use serde::{Deserialize, Serialize};

use super::{finite_ppp, FinitePosterior, GenerativeModel, Posterior};
use crate::error::{Error, Result};
use crate::numerics::RngStream;

/// Direction of travel around the loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rotation {
    Anticlockwise,
    Clockwise,
}

/// Survival function G(t) = (1 − t)^k on [0, 1) for the distance travelled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PowerSurvival {
    pub exponent: u32,
}

impl PowerSurvival {
    /// G(t) = 1 − t; the case that makes P exactly 𝒫_{2α}.
    pub const LINEAR: PowerSurvival = PowerSurvival { exponent: 1 };

    pub fn survival(&self, t: f64) -> f64 {
        (1.0 - t).clamp(0.0, 1.0).powi(self.exponent as i32)
    }

    pub fn density(&self, t: f64) -> f64 {
        if !(0.0..1.0).contains(&t) {
            return 0.0;
        }
        let k = self.exponent as i32;
        k as f64 * (1.0 - t).powi(k - 1)
    }

    pub fn sample(&self, rng: &mut RngStream) -> f64 {
        // G(D) is uniform, so D = 1 − U^{1/k}
        let u = rng.uniform_open0();
        match self.exponent {
            1 => 1.0 - u,
            k => 1.0 - u.powf(1.0 / k as f64),
        }
    }
}

/// A particle travels a random distance along a line ending in a loop.
///
/// The loop has length 2α and is entered at 1 − 2α; the position is recorded
/// clockwise, so a particle that went anticlockwise beyond the entry point
/// shows up on the far side. The discrepancy is the distance travelled along
/// the path belonging to θ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LassoModel {
    alpha: f64,
    travel: PowerSurvival,
}

impl LassoModel {
    pub fn new(alpha: f64, travel: PowerSurvival) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 0.5) {
            return Err(Error::domain(format!("lasso model needs alpha in (0, 1/2), got {alpha}")));
        }
        if travel.exponent == 0 {
            return Err(Error::domain("survival exponent must be at least 1"));
        }
        Ok(Self { alpha, travel })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn travel(&self) -> PowerSurvival {
        self.travel
    }

    fn loop_entry(&self) -> f64 {
        1.0 - 2.0 * self.alpha
    }
}

impl GenerativeModel for LassoModel {
    type Param = Rotation;
    type Data = f64;

    fn name(&self) -> String {
        format!("lasso(alpha={}, k={})", self.alpha, self.travel.exponent)
    }

    fn sample_prior(&self, rng: &mut RngStream) -> Rotation {
        if rng.uniform() < 0.5 {
            Rotation::Anticlockwise
        } else {
            Rotation::Clockwise
        }
    }

    fn sample_data(&self, theta: Rotation, rng: &mut RngStream) -> f64 {
        let distance = self.travel.sample(rng);
        match theta {
            Rotation::Anticlockwise if distance > self.loop_entry() => 2.0 - 2.0 * self.alpha - distance,
            _ => distance,
        }
    }

    fn discrepancy(&self, x: f64, theta: Rotation) -> f64 {
        match theta {
            Rotation::Anticlockwise if x > self.loop_entry() => 2.0 - 2.0 * self.alpha - x,
            _ => x,
        }
    }

    fn conditional_sf(&self, theta: Rotation, x: f64) -> f64 {
        self.travel.survival(self.discrepancy(x, theta))
    }

    fn sample_posterior(&self, x: f64, rng: &mut RngStream) -> Rotation {
        self.posterior(x).sample(rng)
    }

    fn exact_ppp(&self, x: f64) -> f64 {
        finite_ppp(self, x)
    }

    fn known_atoms(&self) -> Vec<f64> {
        if self.travel == PowerSurvival::LINEAR {
            vec![self.alpha]
        } else {
            vec![]
        }
    }
}

impl FinitePosterior for LassoModel {
    fn posterior(&self, x: f64) -> Posterior<Rotation> {
        let support = vec![Rotation::Anticlockwise, Rotation::Clockwise];
        let weights = support.iter().map(|&t| self.travel.density(self.discrepancy(x, t))).collect();
        Posterior::from_weights(support, weights)
    }
}

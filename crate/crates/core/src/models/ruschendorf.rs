use crate::error::{Error, Result};
use crate::numerics::{EmpiricalSample, RngStream};

/// (U₀ + U₁)/2 where U₁ reflects U₀ inside [0, 2α) and copies it elsewhere.
///
/// Below 2α the two terms cancel to α exactly, so the atom is returned as is.
pub fn ruschendorf_value(alpha: f64, u0: f64) -> f64 {
    if u0 < 2.0 * alpha {
        alpha
    } else {
        u0
    }
}

/// n draws of the Rüschendorf construction, which has law 𝒫_{2α}.
pub fn ruschendorf_sample(alpha: f64, rng: &mut RngStream, n: usize) -> Result<EmpiricalSample> {
    if !(alpha > 0.0 && alpha <= 0.5) {
        return Err(Error::domain(format!("alpha must lie in (0, 1/2], got {alpha}")));
    }
    if n == 0 {
        return Err(Error::domain("sample size must be at least 1"));
    }
    EmpiricalSample::new((0..n).map(|_| ruschendorf_value(alpha, rng.uniform())).collect())
}

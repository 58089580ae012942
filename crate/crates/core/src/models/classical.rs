use super::{finite_ppp, FinitePosterior, GenerativeModel, Posterior};
use crate::numerics::RngStream;

/// Known parameter, D ~ U[0, 1), f(D) = D: the classical p-value 1 − D.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ClassicalModel;

impl GenerativeModel for ClassicalModel {
    type Param = ();
    type Data = f64;

    fn name(&self) -> String {
        "classical".into()
    }

    fn sample_prior(&self, _rng: &mut RngStream) {}

    fn sample_data(&self, _theta: (), rng: &mut RngStream) -> f64 {
        rng.uniform()
    }

    fn discrepancy(&self, d: f64, _theta: ()) -> f64 {
        d
    }

    fn conditional_sf(&self, _theta: (), d: f64) -> f64 {
        1.0 - d
    }

    fn sample_posterior(&self, _d: f64, _rng: &mut RngStream) {}

    fn exact_ppp(&self, d: f64) -> f64 {
        finite_ppp(self, d)
    }
}

impl FinitePosterior for ClassicalModel {
    fn posterior(&self, _d: f64) -> Posterior<()> {
        Posterior { support: vec![()], weights: vec![1.0] }
    }
}

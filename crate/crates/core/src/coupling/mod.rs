//! Martingale couplings and the synthesis of p-values with a given law.

mod continuize;
mod intervals;
mod shadow;
mod synthesis;

pub use continuize::{continuize, Continuization, InterpolationRegion, SmoothingKernel};
pub use intervals::IntervalUnion;
pub use shadow::{discrete_idf, martingale_transport, TransportPlan};
pub use synthesis::{
    discretize, mod1_family, synthesize_ppp, AtomKernel, ConditionalLaw, Discretization, Kernel, SyntheticPppModel,
    ThetaLaw, BETA22_ATOMS, MAX_ATOMS,
};

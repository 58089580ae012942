//! Special functions, root finding, random streams and empirical samples.

mod empirical;
mod rng;
mod root;
mod special;

pub(crate) use empirical::kahan_sum;
pub use empirical::{ks_statistic, ks_statistic_with_jumps, EmpiricalSample};
pub use rng::{RngStream, StreamId};
pub(crate) use root::golden_minimum;
pub use root::{bisect_increasing, solve_decreasing, Bracket};
pub use special::{chi2_quantile, chi2_sf, log_gamma, regularized_gamma};

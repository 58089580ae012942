//! Frequency behaviour of posterior predictive p-values.
//!
//! Posterior predictive p-values are *sub-uniform*: smaller than the uniform
//! law in convex order. This crate checks that property through integrated
//! distribution functions ([`idf`]), turns it into calibration bounds
//! ([`bounds`]), simulates the models that attain those bounds ([`models`],
//! [`estimators`]) and builds a posterior predictive p-value with any
//! prescribed sub-uniform law ([`coupling`]).
//!
//! ```
//! use ppcheck::bounds::conservative_single;
//!
//! // a posterior predictive p-value of 0.03 is only guaranteed to be a 0.06-level test
//! assert!((conservative_single(0.03).unwrap() - 0.06).abs() < 1e-15);
//! ```

pub mod bounds;
pub mod coupling;
pub mod distributions;
pub mod error;
pub mod estimators;
pub mod idf;
pub mod models;
pub mod numerics;

pub use error::{Error, Result};

// The guide's snippets run as doctests so the book cannot drift from the API.
#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/sub-uniform.md")]
    mod sub_uniform {}
    #[doc = include_str!("../../../book/src/bounds.md")]
    mod bounds {}
    #[doc = include_str!("../../../book/src/models.md")]
    mod models {}
    #[doc = include_str!("../../../book/src/estimators.md")]
    mod estimators {}
    #[doc = include_str!("../../../book/src/synthesis.md")]
    mod synthesis {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}

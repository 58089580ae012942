use thiserror::Error;

use crate::idf::Violation;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid integrated distribution function: {0}")]
    InvalidIdf(Violation),

    #[error("target is not sub-uniform (convex-order violation {violation:.3e} at x = {witness})")]
    NotSubUniform { witness: f64, violation: f64 },

    #[error("martingale transport infeasible: {reason} (witness x = {witness})")]
    Infeasible { reason: String, witness: f64 },

    #[error("{0} did not converge")]
    Convergence(&'static str),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for failures caused by the environment rather than by the inputs.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io(_) | Error::Csv(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

use crate::bending::LimitSet;

#[derive(Debug, Error)]
pub enum Error {
    /// An input lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A construction produced an object that fails its own invariants.
    #[error("construction failed: {message} (residual {residual:.3e})")]
    Construction { message: String, residual: f64 },

    /// Malformed configuration or input data.
    #[error("validation failed: {0}")]
    Validation(String),

    /// An enumeration ran into its memory budget. The partial result is kept.
    #[error("resource budget of {budget} samples exhausted at depth {depth}")]
    Resource {
        budget: usize,
        depth: usize,
        partial: Box<LimitSet>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by simulation and metric computations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter violated a precondition (negative variance, zero reps, ...).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Two inputs that must agree in length or shape did not.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A covariance matrix had no Cholesky factor.
    #[error("covariance matrix is not positive definite")]
    NotPositiveDefinite,

    /// An outcome vector contained only one class.
    #[error("outcome vector must contain both cases and non-cases")]
    DegenerateOutcome,

    /// A regression design carried no usable variation.
    #[error("degenerate design: {0}")]
    DegenerateDesign(String),

    /// A metric is undefined on the given input.
    #[error("metric undefined: {0}")]
    UndefinedMetric(String),
}

pub type Result<T> = std::result::Result<T, Error>;

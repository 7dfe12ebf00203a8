use thiserror::Error;

/// Errors produced by the simulation, estimation and maximal-operator routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numeric failure: {0}")]
    NumericFailure(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("degenerate curve: {0}")]
    DegenerateCurve(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("MLMC did not converge: {0}")]
    NonConvergence(String),

    #[error("envelope fit failed: {0}")]
    FitFailure(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

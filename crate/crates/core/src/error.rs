use thiserror::Error;

/// Errors raised by field construction, quadrature and the checkers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid dimension {n}: {reason}")]
    InvalidDimension { n: usize, reason: &'static str },

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("integral diverges: {0}")]
    Divergent(String),

    #[error("entropy undefined for a field with zero L2 norm")]
    UndefinedEntropy,

    #[error("envelope rejected: {0}")]
    InvalidEnvelope(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

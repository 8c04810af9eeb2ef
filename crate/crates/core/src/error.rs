use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("cannot normalize: {0}")]
    Normalization(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("insufficient data: need at least {needed} points, have {available}")]
    InsufficientData { needed: usize, available: usize },

    #[error("no neighbours found within radius {radius:e}; enlarge the radius")]
    RadiusTooSmall { radius: f64 },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by sampling, estimation, and simulation operations.
#[derive(Debug, Error)]
pub enum Error {
    /// The sample pool contains no units.
    #[error("sample pool is empty")]
    EmptyPool,

    /// A caller-supplied argument is outside its documented domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Two inputs that must agree in shape do not.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// An internal contract was broken; indicates a construction bug upstream.
    #[error("invariant violation: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn mismatch(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }

    pub(crate) fn invariant(msg: impl Into<String>) -> Self {
        Error::Invariant(msg.into())
    }
}

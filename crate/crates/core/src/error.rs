use thiserror::Error;

/// Errors returned by the blockage engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum BlockageError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A closed form was requested for a distribution it does not cover.
    #[error("unsupported distribution: {0}")]
    UnsupportedDistribution(String),

    #[error("unsupported size: {got} links exceeds the cap of {cap}")]
    UnsupportedSize { got: usize, cap: usize },

    /// The Monte Carlo estimator could not produce a trustworthy estimate.
    #[error("diagnostics: {0}")]
    Diagnostics(String),
}

pub type Result<T> = std::result::Result<T, BlockageError>;

pub(crate) fn invalid(msg: impl Into<String>) -> BlockageError {
    BlockageError::InvalidArgument(msg.into())
}

use thiserror::Error;

use crate::tt::TTTensor;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum SttError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("format error: {0}")]
    Format(String),

    /// The cross engine wanted a rank above the configured cap. The best
    /// approximation found so far is attached.
    #[error("rank cap {cap} reached during cross approximation")]
    RankCapReached { cap: usize, best: Box<TTTensor> },

    #[error("degenerate function: {0}")]
    DegenerateFunction(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SttError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(SttError::InvalidInput(msg.into()))
}

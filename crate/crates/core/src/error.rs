use alloc::string::String;

/// Errors raised by the core pipeline.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("resource guard exceeded: {what} needs {needed} entries, limit is {limit}")]
    Resource {
        what: &'static str,
        needed: u64,
        limit: u64,
    },
    #[error("configuration error: {0}")]
    Configuration(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("insufficient data: need at least {needed} points, got {got}")]
    InsufficientData { needed: usize, got: usize },
}

pub type Result<T> = core::result::Result<T, Error>;

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("instance too large for exhaustive search: n = {n}, limit {limit}")]
    SizeLimit { n: usize, limit: usize },

    #[error("routing failed for session {session}: {reason}")]
    RoutingFailure { session: usize, reason: String },

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },

    /// Wraps a lower-level error with the sweep point it came from.
    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// The innermost error, skipping any context wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            other => other,
        }
    }
}

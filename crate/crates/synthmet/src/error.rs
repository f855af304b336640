use std::path::PathBuf;

/// Crate-wide error type.
///
/// Variants separate caller mistakes (`InvalidInput`, `Unsupported`,
/// `NotFound`) from data problems (`Parse`) and numerical failures
/// (`Numeric`), so front ends can map them to distinct exit paths.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed file content. `line` is 1-based; 0 means "whole file".
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    /// A precondition on arguments or data was violated.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// An iterative or linear-algebra routine failed to produce a result.
    #[error("numerical failure: {0}")]
    Numeric(String),

    /// A named model, variable or file is absent.
    #[error("not found: {0}")]
    NotFound(String),

    /// The request is recognised but not handled by this build.
    #[error("unsupported: {0}")]
    Unsupported(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    pub fn invalid(message: impl Into<String>) -> Self {
        Error::InvalidInput(message.into())
    }

    pub fn numeric(message: impl Into<String>) -> Self {
        Error::Numeric(message.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

//! Crate-wide error type.

use std::path::PathBuf;

/// Errors produced by groklab operations.
///
/// The CLI maps these onto exit codes: domain/config errors exit 1, file
/// ingestion and I/O errors exit 2, diverged runs exit 3.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A precondition on an operation's inputs was violated.
    #[error("{0}")]
    Domain(String),

    /// A training or minimization step produced a non-finite value.
    #[error("non-finite {what} at step {step}")]
    NonFinite { what: &'static str, step: usize },

    /// Underlying file I/O failure.
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A structured file (IDX, CSV, JSON) did not match its format.
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    /// An IDX dataset file is missing, truncated, or has a bad magic number.
    #[error("{path}: {msg}")]
    Ingest { path: PathBuf, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

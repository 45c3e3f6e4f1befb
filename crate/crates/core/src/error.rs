use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the factorization library and its front ends.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter or input violated its documented domain.
    #[error("invalid input: {0}")]
    Validation(String),

    /// A statistic is undefined for the given sample (e.g. zero variance).
    #[error("undefined statistic: {0}")]
    UndefinedStatistic(String),

    /// The weighted median has no strictly positive weight to work with.
    #[error("degenerate weighted median input: {0}")]
    DegenerateInput(String),

    /// A CSV matrix file could not be parsed.
    #[error("{path}: row {row}, column {col}: {msg}")]
    Parse {
        path: String,
        row: usize,
        col: usize,
        msg: String,
    },

    /// A binary image file was malformed.
    #[error("{path}: {msg}")]
    Format { path: String, msg: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for this error: 2 for I/O failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    /// Input data violates a precondition (labels, shapes, masks).
    #[error("{0}")]
    Data(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("fitness evaluation failed for individual {id}: {source}")]
    Evaluation {
        id: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{0}")]
    Runtime(String),
}

impl Error {
    pub(crate) fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 1,
            Error::Io { .. } | Error::Parse { .. } | Error::Data(_) => 2,
            Error::Evaluation { .. } | Error::Runtime(_) => 3,
        }
    }
}

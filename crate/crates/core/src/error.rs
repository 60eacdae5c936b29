use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: {lhs:?} vs {rhs:?}")]
    Shape {
        op: &'static str,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },

    /// A caller broke an operation's precondition.
    #[error("contract violated: {0}")]
    Contract(String),

    /// An object was used in the wrong lifecycle state (e.g. backward twice).
    #[error("invalid state: {0}")]
    State(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("bad file format in {path}: {msg}")]
    Format { path: PathBuf, msg: String },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("usage: {0}")]
    Usage(String),

    #[error("conflict: {0}")]
    Conflict(String),

    #[error("not found: {0}")]
    NotFound(String),
}

impl Error {
    /// Process exit status for command-line use: 2 usage/configuration,
    /// 3 bad input data, 4 numeric failure, 1 anything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Usage(_) | Error::Config(_) => 2,
            Error::Io { .. }
            | Error::Format { .. }
            | Error::NotFound(_)
            | Error::Shape { .. }
            | Error::Contract(_) => 3,
            Error::Numeric(_) => 4,
            Error::State(_) | Error::Conflict(_) => 1,
        }
    }

    pub(crate) fn shape(op: &'static str, lhs: &[usize], rhs: &[usize]) -> Self {
        Error::Shape {
            op,
            lhs: lhs.to_vec(),
            rhs: rhs.to_vec(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            msg: msg.into(),
        }
    }
}

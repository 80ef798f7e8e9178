use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller passed arguments outside an operation's preconditions.
    #[error("usage error: {0}")]
    Usage(String),

    #[error("index {index} out of range for instance with {n} nodes")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    /// Genotype does not open enough facilities for the allocation rule.
    #[error("infeasible genotype: {open} open facilities, at least {required} required")]
    Infeasible { open: usize, required: usize },

    #[error("genotype length {got} does not match instance size {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("parse error in {source_name}: {message}")]
    Parse { source_name: String, message: String },

    #[error("unsupported instance file version {found} (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("refusing exhaustive enumeration: n = {n} exceeds oracle limit {limit}")]
    OracleLimit { n: usize, limit: usize },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad input from the caller rather than by the
    /// environment or the data.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::Usage(_) | Error::IndexOutOfRange { .. } | Error::LengthMismatch { .. }
        )
    }
}

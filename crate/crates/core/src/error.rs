use std::path::PathBuf;

use thiserror::Error;

/// Errors surfaced by the pipeline, its kernels and the file formats.
#[derive(Debug, Error)]
pub enum Error {
    /// A requested window or index falls outside the data.
    #[error("range error: {0}")]
    Range(String),

    /// A filter cannot be designed with the requested parameters.
    #[error("filter design error: {0}")]
    Design(String),

    /// Inputs violate an operation's preconditions (wrong technology,
    /// mismatched sample rates, stream counts, ...).
    #[error("usage error: {0}")]
    Usage(String),

    /// Malformed input data.
    #[error("format error: {0}")]
    Format(String),

    /// A text record could not be parsed.
    #[error("{path}:{line}: parse error: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    /// A data file disagrees with its manifest.
    #[error("schema error: {0}")]
    Schema(String),

    /// A configuration value failed validation.
    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid circuit, ansatz or run configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// An input falls outside the encoding map's domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Malformed dataset contents (e.g. a label that is not one-hot).
    #[error("data error: {0}")]
    Data(String),

    /// Training produced a non-finite cost or gradient.
    #[error("non-finite value at iteration {iteration}: {what}")]
    NonFinite { iteration: usize, what: String },

    #[error("unsupported analysis: {0}")]
    UnsupportedAnalysis(String),

    /// A config file field failed validation.
    #[error("invalid config field `{field}`: {reason}")]
    InvalidField { field: String, reason: String },

    #[error("failed to parse {path}: {reason}")]
    Parse { path: PathBuf, reason: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn field(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidField {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

use std::path::PathBuf;

/// Errors produced by the signature engine.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// An iterative evaluation failed to converge.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// A brute-force evaluation would exceed its work budget.
    #[error("budget exceeded: {0}")]
    Budget(String),

    /// Malformed binary or text input.
    #[error("format error at byte offset {offset}: {message}")]
    Format { offset: u64, message: String },

    /// Malformed input that has no meaningful byte offset.
    #[error("data error: {0}")]
    Data(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

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

pub type Result<T> = std::result::Result<T, Error>;

use std::path::PathBuf;

/// Errors produced anywhere in the classification pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("index error: {0}")]
    Index(String),

    #[error("training diverged: {0}")]
    Training(String),

    #[error("integrity error: {0}")]
    Integrity(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

macro_rules! shape_err {
    ($($arg:tt)*) => {
        $crate::error::Error::Shape(format!($($arg)*))
    };
}
pub(crate) use shape_err;

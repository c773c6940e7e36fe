use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, CvError>;

/// Errors raised anywhere in the pipeline.
///
/// Every variant maps to a short machine-readable code (see [`CvError::code`])
/// which the command-line driver prints as `ERROR:<code>:<message>`.
#[derive(Debug, Error)]
pub enum CvError {
    #[error("{0}")]
    Validation(String),

    #[error("row {row}: {message}")]
    Row { row: usize, message: String },

    #[error("variable '{0}' has zero variance")]
    ZeroVariance(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("{0}")]
    Degenerate(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CvError {
    pub fn code(&self) -> &'static str {
        match self {
            CvError::Validation(_) | CvError::Row { .. } => "validation",
            CvError::ZeroVariance(_) => "zero_variance",
            CvError::Dimension { .. } => "dimension",
            CvError::Degenerate(_) => "degenerate",
            CvError::Io { .. } => "io",
            CvError::Csv(_) => "csv",
            CvError::Json(_) => "json",
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CvError::Io {
            path: path.into(),
            source,
        }
    }
}

macro_rules! invalid {
    ($($arg:tt)*) => {
        $crate::error::CvError::Validation(format!($($arg)*))
    };
}
pub(crate) use invalid;

use thiserror::Error;

/// Errors raised by the THERGM toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("degenerate response: {0}")]
    DegenerateResponse(String),
    #[error("cluster {cluster} too small to fit")]
    ClusterTooSmall { cluster: usize },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Coarse category used by command-line front ends to choose an exit code.
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Config(_) | Error::InvalidInput(_) => ErrorCategory::Config,
            Error::Dimension(_)
            | Error::Parse { .. }
            | Error::ClusterTooSmall { .. }
            | Error::Io(_)
            | Error::Csv(_)
            | Error::Json(_) => ErrorCategory::Data,
            Error::DegenerateResponse(_) | Error::Numerical(_) => ErrorCategory::Numerical,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Config,
    Data,
    Numerical,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

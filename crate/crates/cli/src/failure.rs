use std::fmt;

use thergm::error::ErrorCategory;

/// Error carrying the process exit code: 2 configuration, 3 data,
/// 4 numerical.
#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn config(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }

    pub fn data(message: impl Into<String>) -> Self {
        Self { code: 3, message: message.into() }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        Self { code: 4, message: message.into() }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<thergm::Error> for Failure {
    fn from(e: thergm::Error) -> Self {
        let message = e.to_string();
        match e.category() {
            ErrorCategory::Config => Failure::config(message),
            ErrorCategory::Data => Failure::data(message),
            ErrorCategory::Numerical => Failure::numerical(message),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::data(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::data(format!("invalid JSON: {e}"))
    }
}

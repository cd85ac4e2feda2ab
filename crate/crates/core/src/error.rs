use std::io;

use thiserror::Error;

/// Errors produced anywhere in the harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("singular matrix: pivot magnitude {pivot:e} in column {column}")]
    SingularMatrix { column: usize, pivot: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("malformed payload: {0}")]
    MalformedPayload(String),

    #[error("offload endpoint unreachable: {0}")]
    Unreachable(String),

    #[error("remote error {status}: {message}")]
    Remote { status: u16, message: String },

    #[error("result mismatch: {0}")]
    Mismatch(String),

    #[error("config error{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Config { line: Option<usize>, message: String },

    #[error("incomplete grid: {0}")]
    IncompleteGrid(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("undefined ratio: {0}")]
    UndefinedRatio(String),

    #[error("schema mismatch: {0}")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn malformed(msg: impl Into<String>) -> Self {
        Error::MalformedPayload(msg.into())
    }

    /// Whether the error stems from user configuration rather than a runtime failure.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;

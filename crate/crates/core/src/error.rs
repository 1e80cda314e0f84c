use thiserror::Error;

use crate::preprocess::Frame;

/// Errors raised by the roughness pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("rejected input: {0}")]
    RejectedInput(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate patch: {0}")]
    DegeneratePatch(String),

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("unfittable spectrum: {positive} positive bins, need at least {required}")]
    UnfittableSpectrum { positive: usize, required: usize },

    #[error("point cloud is in the {actual} frame, expected {expected}")]
    FrameMismatch { expected: Frame, actual: Frame },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short stable reason code used in run logs.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid-argument",
            Error::RejectedInput(_) => "rejected-input",
            Error::InsufficientData(_) => "insufficient-data",
            Error::DegeneratePatch(_) => "degenerate-patch",
            Error::ContractViolation(_) => "contract-violation",
            Error::UnfittableSpectrum { .. } => "unfittable-spectrum",
            Error::FrameMismatch { .. } => "frame-mismatch",
            Error::Parse { .. } => "parse",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use std::fmt;

use toxic_core::corpus::CorpusError;
use toxic_core::linear::LinearError;
use toxic_core::neural::NeuralError;
use toxic_core::resample::ResampleError;
use toxic_core::vectorize::{EmbeddingError, TfidfError};

/// Failure of a command, grouped by process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Invalid configuration or arguments (exit 1).
    Config(String),
    /// Missing, unreadable or unusable input data or artifacts (exit 2).
    Data(String),
    /// Non-finite values during training or scoring (exit 3).
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }

    pub fn io(what: impl fmt::Display, e: std::io::Error) -> Self {
        CliError::Data(format!("{what}: {e}"))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Numeric(m) => write!(f, "numeric failure: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        match e {
            CorpusError::Fraction(_) => CliError::Config(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<TfidfError> for CliError {
    fn from(e: TfidfError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<EmbeddingError> for CliError {
    fn from(e: EmbeddingError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<ResampleError> for CliError {
    fn from(e: ResampleError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<LinearError> for CliError {
    fn from(e: LinearError) -> Self {
        match e {
            LinearError::Hyper(_) => CliError::Config(e.to_string()),
            LinearError::Degenerate { .. } => CliError::Numeric(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<NeuralError> for CliError {
    fn from(e: NeuralError) -> Self {
        match e {
            NeuralError::NonFinite { .. } => CliError::Numeric(e.to_string()),
            NeuralError::Config(_) => CliError::Config(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

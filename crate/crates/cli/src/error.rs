use dpgp_core::error::{InferenceError, ModelError};
use dpgp_core::inference::GibbsFailure;
use dpgp_core::io::{IoError, ModelFileError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("model file error: {0}")]
    Model(#[from] ModelFileError),
    #[error("{0}")]
    Ingest(String),
    #[error("numerical failure: {0}")]
    Numerics(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Model(_) => 2,
            CliError::Ingest(_) => 3,
            CliError::Numerics(_) => 4,
        }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        match e {
            IoError::Config(m) => CliError::Config(m),
            other => CliError::Ingest(other.to_string()),
        }
    }
}

impl From<InferenceError> for CliError {
    fn from(e: InferenceError) -> Self {
        match e {
            InferenceError::Model(m) => m.into(),
            other => CliError::Numerics(other.to_string()),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<GibbsFailure> for CliError {
    fn from(e: GibbsFailure) -> Self {
        match e.error {
            InferenceError::Model(m) => m.into(),
            _ => CliError::Numerics(e.to_string()),
        }
    }
}

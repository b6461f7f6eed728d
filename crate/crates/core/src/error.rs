use thiserror::Error;

use crate::model::PatternId;

/// Errors raised by the GP numerics.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GpError {
    #[error("parameter `{name}` must be strictly positive and finite, got {value}")]
    Parameter { name: &'static str, value: f64 },
    #[error("{0}")]
    Domain(String),
    #[error("matrix of size {size} is not positive definite (jitter levels tried: {jitter:?})")]
    Conditioning { size: usize, jitter: Vec<f64> },
}

/// Errors raised while constructing or validating domain values.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid region of interest: {0}")]
    Roi(String),
    #[error("invalid frame: {0}")]
    Frame(String),
    #[error("invalid kernel parameters: {0}")]
    Kernel(String),
    #[error("invalid prior configuration: {0}")]
    Prior(String),
    #[error("point ({x}, {y}) lies outside the region of interest")]
    OutsideRoi { x: f64, y: f64 },
    #[error("empty dataset")]
    EmptyDataset,
}

/// Errors raised by the Gibbs sampler and everything built on top of it.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum InferenceError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("numerical failure in pattern {pattern}: {source}")]
    Pattern {
        pattern: PatternId,
        #[source]
        source: GpError,
    },
    #[error(transparent)]
    Gp(#[from] GpError),
    #[error("inconsistent sampler state: {0}")]
    State(String),
    #[error("non-finite position while simulating vehicle {vehicle} at step {step}")]
    NonFinite { vehicle: usize, step: usize },
}

impl InferenceError {
    pub(crate) fn in_pattern(pattern: PatternId) -> impl FnOnce(GpError) -> Self {
        move |source| InferenceError::Pattern { pattern, source }
    }
}

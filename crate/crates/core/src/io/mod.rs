//! Trajectory ingestion, frame extraction, model files and CSV exports.

use std::path::PathBuf;

use thiserror::Error;

pub mod export;
pub mod frames;
pub mod model_file;
pub mod trajectory_csv;

pub use export::{
    export_field, export_trajectories, read_field_csv, write_field, write_trajectories,
};
pub use frames::{downsample_frames, extract_frames, DropStats};
pub use model_file::{load_model, read_model, save_model, write_model, ModelFileError, MODEL_VERSION};
pub use trajectory_csv::{
    parse_trajectory_csv, read_trajectories, ColumnMapping, IngestConfig, LengthUnit, ParseReport,
    TimeUnit, TrajectoryRecord,
};

/// Errors raised while reading or writing data files.
#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("ingestion error: {0}")]
    Ingest(String),
    #[error("malformed file: {0}")]
    Format(String),
}

impl IoError {
    pub(crate) fn file(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Self {
        let path = path.into();
        move |source| IoError::File { path, source }
    }
}

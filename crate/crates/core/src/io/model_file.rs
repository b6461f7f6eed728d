//! Versioned, line-oriented model files.
//!
//! ```text
//! dpgp-model 1
//! config <json>
//! roi <json>
//! count_dist <json>
//! position_dist <json>
//! frames <json>
//! state <json>
//! trace <json>
//! end
//! ```
//!
//! Floats are written in shortest round-trip form, so a loaded model
//! reproduces every number of the saved one exactly.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

use crate::empirical::{CountDistribution, FrameDistributions, PositionDistribution};
use crate::fitted::FittedModel;
use crate::inference::{GibbsConfig, GibbsTrace};
use crate::model::{Frame, MixtureState, RegionOfInterest};

pub const MODEL_VERSION: u32 = 1;
const MAGIC: &str = "dpgp-model";

#[derive(Debug, Error)]
pub enum ModelFileError {
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("model file version `{found}` is not supported (expected {MODEL_VERSION})")]
    VersionMismatch { found: String },
    #[error("model file is missing section `{0}`")]
    MissingSection(&'static str),
    #[error("invalid `{section}` section: {msg}")]
    Schema { section: String, msg: String },
}

fn schema(section: &str, msg: impl ToString) -> ModelFileError {
    ModelFileError::Schema {
        section: section.to_string(),
        msg: msg.to_string(),
    }
}

fn section<W: Write, T: Serialize>(w: &mut W, name: &str, value: &T) -> std::io::Result<()> {
    write!(w, "{name} ")?;
    serde_json::to_writer(&mut *w, value)?;
    writeln!(w)
}

pub fn write_model<W: Write>(model: &FittedModel, mut w: W) -> std::io::Result<()> {
    writeln!(w, "{MAGIC} {MODEL_VERSION}")?;
    section(&mut w, "config", &model.config)?;
    section(&mut w, "roi", &model.roi)?;
    section(&mut w, "count_dist", &model.dists.count)?;
    section(&mut w, "position_dist", &model.dists.position)?;
    section(&mut w, "frames", &model.frames)?;
    section(&mut w, "state", &model.state)?;
    section(&mut w, "trace", &model.trace)?;
    writeln!(w, "end")?;
    w.flush()
}

pub fn save_model(model: &FittedModel, path: &Path) -> Result<(), ModelFileError> {
    let io = |source| ModelFileError::File {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io)?;
    write_model(model, BufWriter::new(file)).map_err(io)
}

fn parse<T: DeserializeOwned>(name: &str, json: &str) -> Result<T, ModelFileError> {
    let mut de = serde_json::Deserializer::from_str(json);
    let value = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if path == "." {
            schema(name, inner)
        } else {
            schema(name, format!("at `{path}`: {inner}"))
        }
    })?;
    de.end().map_err(|e| schema(name, e))?;
    Ok(value)
}

pub fn read_model<R: BufRead>(r: R) -> Result<FittedModel, ModelFileError> {
    let mut lines = r.lines();
    let mut next = |expect: &'static str| -> Result<Option<String>, ModelFileError> {
        lines
            .next()
            .transpose()
            .map_err(|e| schema(expect, e))
    };
    let header = next("header")?.ok_or_else(|| schema("header", "empty file"))?;
    match header.split_once(' ') {
        Some((MAGIC, v)) if v.trim() == MODEL_VERSION.to_string() => {}
        Some((MAGIC, v)) => {
            return Err(ModelFileError::VersionMismatch {
                found: v.trim().to_string(),
            })
        }
        _ => return Err(schema("header", format!("expected `{MAGIC} <version>`"))),
    }

    let mut body = |name: &'static str| -> Result<String, ModelFileError> {
        let line = next(name)?.ok_or(ModelFileError::MissingSection(name))?;
        match line.split_once(' ') {
            Some((tag, body)) if tag == name => Ok(body.to_string()),
            _ => Err(ModelFileError::MissingSection(name)),
        }
    };
    let config: GibbsConfig = parse("config", &body("config")?)?;
    let roi: RegionOfInterest = parse("roi", &body("roi")?)?;
    let count: CountDistribution = parse("count_dist", &body("count_dist")?)?;
    let position: PositionDistribution = parse("position_dist", &body("position_dist")?)?;
    let frames: Vec<Frame> = parse("frames", &body("frames")?)?;
    let state: MixtureState = parse("state", &body("state")?)?;
    let trace: GibbsTrace = parse("trace", &body("trace")?)?;
    match next("end")? {
        Some(l) if l.trim_end() == "end" => {}
        _ => return Err(ModelFileError::MissingSection("end")),
    }

    let total: f64 = count.probabilities().values().sum();
    if count.probabilities().is_empty() || (total - 1.0).abs() > 1e-9 || count.probabilities().values().any(|p| *p < 0.0) {
        return Err(schema("count_dist", "probabilities must be non-negative and sum to 1"));
    }
    if position.roi() != &roi {
        return Err(schema("position_dist", "ROI differs from the `roi` section"));
    }
    let w = position.weights();
    let total: f64 = w.iter().sum();
    if w.len() != roi.n_bins() || (total - 1.0).abs() > 1e-9 || w.iter().any(|p| *p < 0.0) {
        return Err(schema(
            "position_dist",
            format!("expected {} non-negative weights summing to 1", roi.n_bins()),
        ));
    }
    for (i, f) in frames.iter().enumerate() {
        Frame::new(f.frame_id, f.timestamp, f.vehicles().to_vec()).map_err(|e| schema("frames", format!("at `{i}`: {e}")))?;
        if !f.inside(&roi) {
            return Err(schema("frames", format!("at `{i}`: vehicle outside the ROI")));
        }
    }
    FittedModel::new(roi, config, FrameDistributions { count, position }, frames, state, trace)
        .map_err(|e| schema("state", e))
}

pub fn load_model(path: &Path) -> Result<FittedModel, ModelFileError> {
    let file = File::open(path).map_err(|source| ModelFileError::File {
        path: path.to_path_buf(),
        source,
    })?;
    read_model(BufReader::new(file))
}

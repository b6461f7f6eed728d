//! Delimited-text trajectory input.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::IoError;

/// One raw observation of one vehicle, in metres and seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub vehicle_id: u64,
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub vx: Option<f64>,
    pub vy: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LengthUnit {
    #[default]
    M,
    Ft,
}

impl LengthUnit {
    /// Metres per unit.
    pub fn to_metres(self) -> f64 {
        match self {
            LengthUnit::M => 1.0,
            LengthUnit::Ft => 0.3048,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeUnit {
    #[default]
    S,
    Ms,
}

impl TimeUnit {
    pub fn to_seconds(self) -> f64 {
        match self {
            TimeUnit::S => 1.0,
            TimeUnit::Ms => 1e-3,
        }
    }
}

/// Header names of the columns to read.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ColumnMapping {
    pub id: String,
    pub time: String,
    pub x: String,
    pub y: String,
    pub vx: Option<String>,
    pub vy: Option<String>,
}

impl Default for ColumnMapping {
    fn default() -> Self {
        ColumnMapping {
            id: "vehicle_id".into(),
            time: "t".into(),
            x: "x".into(),
            y: "y".into(),
            vx: None,
            vy: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestConfig {
    pub columns: ColumnMapping,
    pub length_unit: LengthUnit,
    pub time_unit: TimeUnit,
    pub delimiter: char,
    /// Largest tolerated fraction of unparseable rows.
    pub max_bad_ratio: f64,
}

impl Default for IngestConfig {
    fn default() -> Self {
        IngestConfig {
            columns: ColumnMapping::default(),
            length_unit: LengthUnit::M,
            time_unit: TimeUnit::S,
            delimiter: ',',
            max_bad_ratio: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParseReport {
    pub records: Vec<TrajectoryRecord>,
    pub rows: usize,
    pub rejected: usize,
}

struct Columns {
    id: usize,
    time: usize,
    x: usize,
    y: usize,
    vx: Option<usize>,
    vy: Option<usize>,
}

fn find(headers: &csv::StringRecord, name: &str) -> Result<usize, IoError> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| IoError::Config(format!("column `{name}` not found in header")))
}

fn parse_row(row: &csv::StringRecord, c: &Columns, len: f64, time: f64) -> Option<TrajectoryRecord> {
    let num = |i: usize| -> Option<f64> {
        let v: f64 = row.get(i)?.trim().parse().ok()?;
        v.is_finite().then_some(v)
    };
    let opt = |i: Option<usize>| -> Option<Option<f64>> {
        match i {
            None => Some(None),
            Some(i) => match row.get(i).map(str::trim) {
                None | Some("") => Some(None),
                Some(_) => num(i).map(Some),
            },
        }
    };
    Some(TrajectoryRecord {
        vehicle_id: row.get(c.id)?.trim().parse().ok()?,
        t: num(c.time)? * time,
        x: num(c.x)? * len,
        y: num(c.y)? * len,
        vx: opt(c.vx)?.map(|v| v * len),
        vy: opt(c.vy)?.map(|v| v * len),
    })
}

/// Parses trajectory rows, skipping malformed ones up to the configured ratio.
pub fn parse_trajectory_csv<R: Read>(input: R, config: &IngestConfig) -> Result<ParseReport, IoError> {
    if !config.delimiter.is_ascii() {
        return Err(IoError::Config("delimiter must be an ASCII character".into()));
    }
    if !(0.0..=1.0).contains(&config.max_bad_ratio) {
        return Err(IoError::Config("max_bad_ratio must lie in [0, 1]".into()));
    }
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(config.delimiter as u8)
        .flexible(true)
        .from_reader(input);
    let headers = reader
        .headers()
        .map_err(|e| IoError::Ingest(format!("cannot read header: {e}")))?
        .clone();
    let m = &config.columns;
    let cols = Columns {
        id: find(&headers, &m.id)?,
        time: find(&headers, &m.time)?,
        x: find(&headers, &m.x)?,
        y: find(&headers, &m.y)?,
        vx: m.vx.as_deref().map(|n| find(&headers, n)).transpose()?,
        vy: m.vy.as_deref().map(|n| find(&headers, n)).transpose()?,
    };
    let len = config.length_unit.to_metres();
    let time = config.time_unit.to_seconds();
    let mut records = Vec::new();
    let mut rows = 0;
    let mut rejected = 0;
    for row in reader.records() {
        rows += 1;
        match row.ok().and_then(|r| parse_row(&r, &cols, len, time)) {
            Some(rec) => records.push(rec),
            None => rejected += 1,
        }
    }
    if rows > 0 && rejected as f64 / rows as f64 > config.max_bad_ratio {
        return Err(IoError::Ingest(format!(
            "{rejected} of {rows} rows could not be parsed (limit {})",
            config.max_bad_ratio
        )));
    }
    Ok(ParseReport {
        records,
        rows,
        rejected,
    })
}

pub fn read_trajectories(path: &Path, config: &IngestConfig) -> Result<ParseReport, IoError> {
    let file = File::open(path).map_err(IoError::file(path))?;
    parse_trajectory_csv(std::io::BufReader::new(file), config).map_err(|e| match e {
        IoError::Ingest(m) => IoError::Ingest(format!("{}: {m}", path.display())),
        other => other,
    })
}

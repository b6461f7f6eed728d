//! Synthetic trajectories driven by planted analytic velocity fields.
//!
//! The scene is split into segments of consecutive frames; every segment is
//! governed by one field, and its vehicles are integrated along that field
//! with RK4 at a raw sampling rate finer than the frame spacing.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::io::TrajectoryRecord;
use crate::model::RegionOfInterest;
use crate::rng::{stream, tag};

pub const EXTENT: f64 = 100.0;
const CENTRE: f64 = 50.0;
/// Spawned tracks stay at least this far inside the scene.
const MARGIN: f64 = 1.0;
const MAX_SPAWN_ATTEMPTS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlantedField {
    /// Uniform flow (10, 0).
    Constant,
    /// Rigid rotation at 0.25 rad/s about the scene centre.
    Rotational,
    /// Pure strain `0.15 (y - 50, x - 50)`.
    Shear,
}

impl PlantedField {
    pub const ALL: [PlantedField; 3] = [PlantedField::Constant, PlantedField::Rotational, PlantedField::Shear];

    pub fn velocity(self, p: [f64; 2]) -> [f64; 2] {
        let (dx, dy) = (p[0] - CENTRE, p[1] - CENTRE);
        match self {
            PlantedField::Constant => [10.0, 0.0],
            PlantedField::Rotational => [-0.25 * dy, 0.25 * dx],
            PlantedField::Shear => [0.15 * dy, 0.15 * dx],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PlantedField::Constant => "constant",
            PlantedField::Rotational => "rotational",
            PlantedField::Shear => "shear",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub fields: Vec<PlantedField>,
    pub n_frames: usize,
    pub frames_per_segment: usize,
    pub min_vehicles: usize,
    pub max_vehicles: usize,
    /// Frame spacing in seconds.
    pub dt: f64,
    /// Raw sampling interval in seconds; must divide `dt`.
    pub dt_raw: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            fields: PlantedField::ALL.to_vec(),
            n_frames: 150,
            frames_per_segment: 5,
            min_vehicles: 3,
            max_vehicles: 8,
            dt: 0.5,
            dt_raw: 0.1,
            seed: 0,
        }
    }
}

impl SynthSpec {
    fn validate(&self) -> Result<usize, ModelError> {
        let bad = |m: &str| Err(ModelError::Frame(format!("synthetic spec: {m}")));
        if self.fields.is_empty() {
            return bad("at least one field is required");
        }
        if self.n_frames == 0 || self.frames_per_segment == 0 {
            return bad("n_frames and frames_per_segment must be >= 1");
        }
        if self.min_vehicles == 0 || self.min_vehicles > self.max_vehicles {
            return bad("need 1 <= min_vehicles <= max_vehicles");
        }
        if !(self.dt > 0.0 && self.dt_raw > 0.0) {
            return bad("dt and dt_raw must be > 0");
        }
        let ratio = self.dt / self.dt_raw;
        let per_frame = ratio.round();
        if per_frame < 1.0 || (ratio - per_frame).abs() > 1e-9 * ratio {
            return bad("dt must be an integer multiple of dt_raw");
        }
        Ok(per_frame as usize)
    }
}

/// Ground-truth field of one frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameLabel {
    pub frame: usize,
    pub t: f64,
    pub field: PlantedField,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthData {
    pub records: Vec<TrajectoryRecord>,
    pub labels: Vec<FrameLabel>,
}

/// Region covered by the synthetic scene.
pub fn synth_roi() -> RegionOfInterest {
    RegionOfInterest::new(0.0, EXTENT, 0.0, EXTENT, RegionOfInterest::DEFAULT_BINS, RegionOfInterest::DEFAULT_BINS)
        .expect("static ROI is valid")
}

fn rk4(field: PlantedField, p: [f64; 2], h: f64) -> [f64; 2] {
    let at = |q: [f64; 2], k: [f64; 2], s: f64| field.velocity([q[0] + s * k[0], q[1] + s * k[1]]);
    let k1 = field.velocity(p);
    let k2 = at(p, k1, h / 2.0);
    let k3 = at(p, k2, h / 2.0);
    let k4 = at(p, k3, h);
    [
        p[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        p[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
    ]
}

fn inside(p: [f64; 2]) -> bool {
    (MARGIN..=EXTENT - MARGIN).contains(&p[0]) && (MARGIN..=EXTENT - MARGIN).contains(&p[1])
}

/// A track of `n` raw samples that stays inside the scene.
fn spawn<R: Rng + ?Sized>(field: PlantedField, n: usize, h: f64, rng: &mut R) -> Result<Vec<[f64; 2]>, ModelError> {
    'attempt: for _ in 0..MAX_SPAWN_ATTEMPTS {
        let mut p = [
            rng.random_range(MARGIN..EXTENT - MARGIN),
            rng.random_range(MARGIN..EXTENT - MARGIN),
        ];
        let mut track = Vec::with_capacity(n);
        track.push(p);
        for _ in 1..n {
            p = rk4(field, p, h);
            if !inside(p) {
                continue 'attempt;
            }
            track.push(p);
        }
        return Ok(track);
    }
    Err(ModelError::Frame(format!(
        "could not place a {} track inside the scene",
        field.name()
    )))
}

/// Raw position records (no velocity columns) and per-frame labels.
pub fn generate(spec: &SynthSpec) -> Result<SynthData, ModelError> {
    let per_frame = spec.validate()?;
    let n_segments = spec.n_frames.div_ceil(spec.frames_per_segment);
    let mut fields: Vec<PlantedField> = (0..n_segments).map(|s| spec.fields[s % spec.fields.len()]).collect();
    fields.shuffle(&mut stream(spec.seed, &[tag::SYNTH]));

    let mut records = Vec::new();
    let mut labels = Vec::with_capacity(spec.n_frames);
    for (s, &field) in fields.iter().enumerate() {
        let first = s * spec.frames_per_segment;
        let ticks = spec.frames_per_segment.min(spec.n_frames - first);
        for k in first..first + ticks {
            labels.push(FrameLabel {
                frame: k,
                t: k as f64 * spec.dt,
                field,
            });
        }
        // One raw sample either side of the segment keeps the velocity
        // estimates at its first and last frames centred.
        let start = (first * per_frame) as i64 - 1;
        let n_raw = (ticks - 1) * per_frame + 3;
        let mut rng = stream(spec.seed, &[tag::SYNTH, s as u64 + 1]);
        let count = rng.random_range(spec.min_vehicles..=spec.max_vehicles);
        for v in 0..count {
            let track = spawn(field, n_raw, spec.dt_raw, &mut rng)?;
            for (j, p) in track.into_iter().enumerate() {
                records.push(TrajectoryRecord {
                    vehicle_id: (s * 1000 + v) as u64,
                    t: (start + j as i64) as f64 * spec.dt_raw,
                    x: p[0],
                    y: p[1],
                    vx: None,
                    vy: None,
                });
            }
        }
    }
    Ok(SynthData { records, labels })
}

pub fn write_records<W: Write>(records: &[TrajectoryRecord], mut w: W) -> std::io::Result<()> {
    writeln!(w, "vehicle_id,t,x,y")?;
    for r in records {
        writeln!(w, "{},{},{},{}", r.vehicle_id, r.t, r.x, r.y)?;
    }
    w.flush()
}

pub fn write_labels<W: Write>(labels: &[FrameLabel], mut w: W) -> std::io::Result<()> {
    writeln!(w, "frame,t,label")?;
    for l in labels {
        writeln!(w, "{},{},{}", l.frame, l.t, l.field.name())?;
    }
    w.flush()
}

//! CSV exports of velocity fields and trajectories.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::gp::VectorField;
use crate::simulate::Trajectory;

use super::IoError;

pub const FIELD_HEADER: [&str; 6] = ["x", "y", "mean_vx", "mean_vy", "var_vx", "var_vy"];
pub const TRAJECTORY_HEADER: [&str; 6] = ["vehicle_id", "t", "x", "y", "vx", "vy"];

fn csv_error(e: csv::Error) -> std::io::Error {
    std::io::Error::other(e)
}

/// Grid rows in row-major order (y outer, x inner).
pub fn write_field<W: Write>(field: &VectorField, w: W) -> std::io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(FIELD_HEADER).map_err(csv_error)?;
    for i in 0..field.len() {
        let (p, m, v) = (field.points[i], field.mean[i], field.var[i]);
        out.write_record([p[0], p[1], m[0], m[1], v[0], v[1]].map(|x| x.to_string()))
            .map_err(csv_error)?;
    }
    out.flush()
}

/// Rows ordered by vehicle id, then time.
pub fn write_trajectories<W: Write>(trajectories: &[Trajectory], w: W) -> std::io::Result<()> {
    let mut sorted: Vec<&Trajectory> = trajectories.iter().collect();
    sorted.sort_by_key(|t| t.vehicle_id);
    let mut out = csv::Writer::from_writer(w);
    out.write_record(TRAJECTORY_HEADER).map_err(csv_error)?;
    for t in sorted {
        let mut samples = t.samples.clone();
        samples.sort_by(|a, b| a.t.total_cmp(&b.t));
        for s in samples {
            out.write_record([
                t.vehicle_id.to_string(),
                s.t.to_string(),
                s.x.to_string(),
                s.y.to_string(),
                s.vx.to_string(),
                s.vy.to_string(),
            ])
            .map_err(csv_error)?;
        }
    }
    out.flush()
}

fn create(path: &Path) -> Result<BufWriter<File>, IoError> {
    File::create(path).map(BufWriter::new).map_err(IoError::file(path))
}

pub fn export_field(field: &VectorField, path: &Path) -> Result<(), IoError> {
    write_field(field, create(path)?).map_err(IoError::file(path))
}

pub fn export_trajectories(trajectories: &[Trajectory], path: &Path) -> Result<(), IoError> {
    write_trajectories(trajectories, create(path)?).map_err(IoError::file(path))
}

/// Reads a field written by [`write_field`].
pub fn read_field<R: Read>(r: R) -> Result<VectorField, IoError> {
    let mut reader = csv::Reader::from_reader(r);
    let header = reader
        .headers()
        .map_err(|e| IoError::Format(e.to_string()))?
        .clone();
    if header.iter().ne(FIELD_HEADER) {
        return Err(IoError::Format(format!("unexpected field header {header:?}")));
    }
    let mut points = Vec::new();
    let mut mean = Vec::new();
    let mut var = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(|e| IoError::Format(e.to_string()))?;
        let vals: Vec<f64> = row
            .iter()
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|e| IoError::Format(format!("row {}: {e}", i + 1)))?;
        if vals.len() != 6 {
            return Err(IoError::Format(format!("row {} has {} columns", i + 1, vals.len())));
        }
        points.push([vals[0], vals[1]]);
        mean.push([vals[2], vals[3]]);
        var.push([vals[4], vals[5]]);
    }
    let nx = points.iter().take_while(|p| p[1] == points[0][1]).count();
    let ny = if nx == 0 { 0 } else { points.len() / nx };
    Ok(VectorField {
        nx,
        ny,
        points,
        mean,
        var,
    })
}

pub fn read_field_csv(path: &Path) -> Result<VectorField, IoError> {
    read_field(File::open(path).map_err(IoError::file(path))?)
}

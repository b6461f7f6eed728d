//! Snapping raw trajectories onto a uniform time grid of frames.

use std::collections::BTreeMap;

use crate::model::{Frame, RegionOfInterest, Vehicle};

use super::{IoError, TrajectoryRecord};

/// Where each input record went. `emitted + duplicates + downsampled +
/// outside_roi + single_sample` equals the number of input records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DropStats {
    pub records: usize,
    pub emitted: usize,
    /// Repeated timestamps within one vehicle's track.
    pub duplicates: usize,
    /// Samples that were not the nearest to their tick.
    pub downsampled: usize,
    pub outside_roi: usize,
    /// Lone samples whose velocity could not be derived.
    pub single_sample: usize,
}

impl DropStats {
    pub fn accounted(&self) -> usize {
        self.emitted + self.duplicates + self.downsampled + self.outside_roi + self.single_sample
    }
}

/// Fills in missing velocities by central differences on the raw track,
/// one-sided at its ends.
fn derive_velocities(track: &mut [TrajectoryRecord]) {
    let n = track.len();
    let at = |i: usize, j: usize, track: &[TrajectoryRecord]| {
        let dt = track[j].t - track[i].t;
        ((track[j].x - track[i].x) / dt, (track[j].y - track[i].y) / dt)
    };
    let derived: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let (i, j) = match k {
                0 => (0, 1),
                k if k == n - 1 => (n - 2, n - 1),
                k => (k - 1, k + 1),
            };
            at(i, j, track)
        })
        .collect();
    for (rec, (vx, vy)) in track.iter_mut().zip(derived) {
        if rec.vx.is_none() || rec.vy.is_none() {
            rec.vx = Some(rec.vx.unwrap_or(vx));
            rec.vy = Some(rec.vy.unwrap_or(vy));
        }
    }
}

/// Builds frames spaced `dt` seconds apart from raw records.
///
/// Each vehicle contributes at most one sample per tick, the one nearest the
/// tick time (ties go to the earlier sample). Vehicles outside the ROI are
/// dropped and empty ticks produce no frame. Vehicles within a frame are
/// ordered by id and `frame_id` is the position in the returned sequence.
pub fn extract_frames(
    records: &[TrajectoryRecord],
    roi: &RegionOfInterest,
    dt: f64,
) -> Result<(Vec<Frame>, DropStats), IoError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(IoError::Config(format!("dt = {dt} must be > 0")));
    }
    let mut stats = DropStats {
        records: records.len(),
        ..DropStats::default()
    };
    let mut tracks: BTreeMap<u64, Vec<TrajectoryRecord>> = BTreeMap::new();
    for r in records {
        tracks.entry(r.vehicle_id).or_default().push(*r);
    }

    let mut ticks: BTreeMap<i64, BTreeMap<u64, Vehicle>> = BTreeMap::new();
    for (id, mut track) in tracks {
        track.sort_by(|a, b| a.t.total_cmp(&b.t));
        let before = track.len();
        track.dedup_by(|b, a| a.t == b.t);
        stats.duplicates += before - track.len();

        let complete = track.iter().all(|r| r.vx.is_some() && r.vy.is_some());
        if !complete {
            if track.len() < 2 {
                stats.single_sample += track.len();
                continue;
            }
            derive_velocities(&mut track);
        }

        // Nearest sample per tick; the track is sorted so the first of equally
        // near samples wins.
        let mut best: BTreeMap<i64, (f64, TrajectoryRecord)> = BTreeMap::new();
        for r in &track {
            let tick = (r.t / dt + 0.5).floor() as i64;
            let dist = (r.t - tick as f64 * dt).abs();
            match best.get(&tick) {
                Some((d, _)) if *d <= dist => stats.downsampled += 1,
                Some(_) => {
                    stats.downsampled += 1;
                    best.insert(tick, (dist, *r));
                }
                None => {
                    best.insert(tick, (dist, *r));
                }
            }
        }
        for (tick, (_, r)) in best {
            if !roi.contains(r.x, r.y) {
                stats.outside_roi += 1;
                continue;
            }
            let v = Vehicle::new(r.x, r.y, r.vx.unwrap_or(0.0), r.vy.unwrap_or(0.0));
            ticks.entry(tick).or_default().insert(id, v);
        }
    }

    let mut frames = Vec::with_capacity(ticks.len());
    for (tick, vehicles) in ticks {
        let vehicles: Vec<Vehicle> = vehicles.into_values().collect();
        stats.emitted += vehicles.len();
        let frame = Frame::new(frames.len(), tick as f64 * dt, vehicles)
            .map_err(|e| IoError::Ingest(e.to_string()))?;
        frames.push(frame);
    }
    Ok((frames, stats))
}

/// Keeps `max` evenly spaced frames when there are more, renumbering them.
pub fn downsample_frames(frames: Vec<Frame>, max: usize) -> Vec<Frame> {
    let n = frames.len();
    if n <= max {
        return frames;
    }
    let keep: Vec<usize> = (0..max).map(|k| k * n / max).collect();
    let mut out = Vec::with_capacity(max);
    let mut frames: Vec<Option<Frame>> = frames.into_iter().map(Some).collect();
    for (new_id, i) in keep.into_iter().enumerate() {
        let mut f = frames[i].take().expect("indices are strictly increasing");
        f.frame_id = new_id;
        out.push(f);
    }
    out
}

//! Empirical generative distributions for the vehicle count and the vehicle
//! positions of a frame.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::model::{Frame, RegionOfInterest};

/// Point masses over the vehicle counts seen in the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountDistribution {
    probs: BTreeMap<usize, f64>,
}

impl CountDistribution {
    pub fn probabilities(&self) -> &BTreeMap<usize, f64> {
        &self.probs
    }

    pub fn prob(&self, l: usize) -> f64 {
        self.probs.get(&l).copied().unwrap_or(0.0)
    }
}

/// Histogram over the ROI bins with uniform placement inside each bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionDistribution {
    roi: RegionOfInterest,
    weights: Vec<f64>,
}

impl PositionDistribution {
    pub fn roi(&self) -> &RegionOfInterest {
        &self.roi
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Both distributions fitted on one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameDistributions {
    pub count: CountDistribution,
    pub position: PositionDistribution,
}

impl FrameDistributions {
    pub fn fit(frames: &[Frame], roi: &RegionOfInterest) -> Result<Self, ModelError> {
        Ok(FrameDistributions {
            count: fit_count_dist(frames)?,
            position: fit_position_dist(frames, roi)?,
        })
    }

    /// `log φ(l) + Σ log ψ(x_j, y_j)` for a frame.
    pub fn frame_log_prob(&self, frame: &Frame) -> Result<f64, ModelError> {
        let mut total = count_log_prob(&self.count, frame.len());
        for v in frame.vehicles() {
            total += position_log_prob(&self.position, v.x, v.y)?;
        }
        Ok(total)
    }
}

pub fn fit_count_dist(frames: &[Frame]) -> Result<CountDistribution, ModelError> {
    if frames.is_empty() {
        return Err(ModelError::EmptyDataset);
    }
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for f in frames {
        *counts.entry(f.len()).or_default() += 1;
    }
    let total = frames.len() as f64;
    Ok(CountDistribution {
        probs: counts
            .into_iter()
            .map(|(m, c)| (m, c as f64 / total))
            .collect(),
    })
}

pub fn fit_position_dist(
    frames: &[Frame],
    roi: &RegionOfInterest,
) -> Result<PositionDistribution, ModelError> {
    if frames.is_empty() {
        return Err(ModelError::EmptyDataset);
    }
    let mut counts = vec![0usize; roi.n_bins()];
    let mut total = 0usize;
    for v in frames.iter().flat_map(|f| f.vehicles()) {
        let bin = roi
            .bin_index(v.x, v.y)
            .ok_or(ModelError::OutsideRoi { x: v.x, y: v.y })?;
        counts[bin] += 1;
        total += 1;
    }
    Ok(PositionDistribution {
        roi: *roi,
        weights: counts.iter().map(|&c| c as f64 / total as f64).collect(),
    })
}

/// `log a_l`, or `-∞` for a count never observed.
pub fn count_log_prob(dist: &CountDistribution, l: usize) -> f64 {
    match dist.probs.get(&l) {
        Some(p) => p.ln(),
        None => f64::NEG_INFINITY,
    }
}

/// Log-density of a position: `log(a_bin / bin_area)`, `-∞` in empty bins.
pub fn position_log_prob(dist: &PositionDistribution, x: f64, y: f64) -> Result<f64, ModelError> {
    let bin = dist
        .roi
        .bin_index(x, y)
        .ok_or(ModelError::OutsideRoi { x, y })?;
    let w = dist.weights[bin];
    if w == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(w.ln() - dist.roi.bin_rect(bin).area().ln())
}

fn categorical<R: Rng + ?Sized>(weights: impl Iterator<Item = f64> + Clone, rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, w) in weights.enumerate() {
        if w <= 0.0 {
            continue;
        }
        acc += w;
        last = i;
        if u < acc {
            return i;
        }
    }
    // Rounding left the cumulative sum just below 1.
    last
}

pub fn sample_count<R: Rng + ?Sized>(dist: &CountDistribution, rng: &mut R) -> usize {
    let keys: Vec<usize> = dist.probs.keys().copied().collect();
    keys[categorical(dist.probs.values().copied(), rng)]
}

pub fn sample_position<R: Rng + ?Sized>(dist: &PositionDistribution, rng: &mut R) -> (f64, f64) {
    let bin = categorical(dist.weights.iter().copied(), rng);
    let r = dist.roi.bin_rect(bin);
    // Open interval keeps the draw off the lower edge, which belongs to the
    // neighbouring bin.
    let x = r.x_max - rng.random::<f64>() * r.width();
    let y = r.y_max - rng.random::<f64>() * r.height();
    (x.clamp(r.x_min, r.x_max), y.clamp(r.y_min, r.y_max))
}

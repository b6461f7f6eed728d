//! Frame generation, test-frame classification and trajectory roll-out.

use nalgebra::DVector;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::empirical::{sample_count, sample_position, FrameDistributions};
use crate::error::{InferenceError, ModelError};
use crate::fitted::FittedModel;
use crate::gp::{factorize, ConditionedField};
use crate::inference::crp::crp_log_predictive;
use crate::inference::likelihood::{frame_velocity_log_likelihood, new_pattern_velocity_log_likelihood};
use crate::inference::{AssignmentScores, Candidate};
use crate::model::{Axis, Frame, PatternId, RegionOfInterest, Vehicle};
use crate::rng::{stream, tag};

/// Draws a frame: vehicle count from φ, positions from ψ, velocities jointly
/// from the field's latent posterior at those positions.
pub fn generate_frame<R: Rng + ?Sized>(
    field: &ConditionedField,
    dists: &FrameDistributions,
    frame_id: usize,
    timestamp: f64,
    rng: &mut R,
) -> Result<Frame, InferenceError> {
    let l = sample_count(&dists.count, rng);
    let positions: Vec<[f64; 2]> = (0..l)
        .map(|_| {
            let (x, y) = sample_position(&dists.position, rng);
            [x, y]
        })
        .collect();
    let posterior = field.posterior(&positions, &[])?;
    let mut v = [Vec::new(), Vec::new()];
    for axis in Axis::BOTH {
        let post = &posterior[axis.index()];
        let factor = factorize(&post.cov, field.params().sigma_sq(axis), true)?;
        let z = DVector::from_fn(l, |_, _| StandardNormal.sample(rng));
        let draw = &post.mean + factor.chol.l() * z;
        v[axis.index()] = draw.iter().copied().collect();
    }
    let vehicles = (0..l)
        .map(|j| Vehicle::new(positions[j][0], positions[j][1], v[0][j], v[1][j]))
        .collect();
    Ok(Frame::new(frame_id, timestamp, vehicles)?)
}

/// Outcome of classifying a frame against a fitted mixture.
#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub choice: Candidate,
    pub scores: AssignmentScores,
}

impl Classification {
    /// Best existing pattern, even when the new-pattern option wins.
    pub fn best_existing(&self) -> Option<PatternId> {
        let mut best: Option<(PatternId, f64)> = None;
        for (j, c) in self.scores.candidates.iter().enumerate() {
            if let Candidate::Existing(id) = c {
                let s = self.scores.score(j);
                if best.is_none_or(|(_, b)| s > b) {
                    best = Some((*id, s));
                }
            }
        }
        best.map(|b| b.0)
    }
}

/// MAP assignment of a frame that is not part of the fitted data. The state
/// is not modified.
pub fn classify_frame(frame: &Frame, model: &FittedModel) -> Result<Classification, InferenceError> {
    let state = &model.state;
    let ids = model.pattern_ids();
    let counts: Vec<usize> = state.patterns.values().map(|p| p.count()).collect();
    let log_prior = crp_log_predictive(&counts, state.alpha, state.n());
    let mut log_velocity: Vec<f64> = ids
        .par_iter()
        .map(|id| {
            let field = model.field(*id).expect("field cached for every pattern");
            frame_velocity_log_likelihood(frame, field, &[]).map_err(InferenceError::in_pattern(*id))
        })
        .collect::<Result<_, _>>()?;
    let mut rng = stream(model.config.prior.rng_seed, &[tag::CLASSIFY, frame.frame_id as u64]);
    log_velocity.push(new_pattern_velocity_log_likelihood(
        frame,
        &model.config.prior,
        model.config.sigma_n_sq,
        &mut rng,
    )?);
    let mut candidates: Vec<Candidate> = ids.into_iter().map(Candidate::Existing).collect();
    candidates.push(Candidate::New);
    let scores = AssignmentScores {
        candidates,
        log_prior,
        log_velocity,
        log_base: model.dists.frame_log_prob(frame)?,
    };
    Ok(Classification {
        choice: scores.candidates[scores.map_index()],
        scores,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Integrator {
    #[default]
    Euler,
    Midpoint,
}

/// Which velocity drives the roll-out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VelocitySource {
    /// Posterior mean field.
    #[default]
    Mean,
    /// Independent draws from the latent posterior marginal at each step.
    Sampled,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RolloutOptions {
    pub integrator: Integrator,
    pub velocity: VelocitySource,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub vehicle_id: usize,
    pub samples: Vec<TrajectorySample>,
}

fn velocity_at<R: Rng + ?Sized>(
    field: &ConditionedField,
    p: [f64; 2],
    source: VelocitySource,
    rng: &mut R,
) -> [f64; 2] {
    match source {
        VelocitySource::Mean => field.mean_at(p),
        VelocitySource::Sampled => {
            let (m, v) = field.marginals(&[p]);
            let zx: f64 = StandardNormal.sample(rng);
            let zy: f64 = StandardNormal.sample(rng);
            [m[0][0] + v[0][0].sqrt() * zx, m[1][0] + v[1][0].sqrt() * zy]
        }
    }
}

/// Rolls every vehicle of `initial` forward through the field for up to
/// `n_steps` steps of `dt` seconds. A vehicle stops at the last sample before
/// it would leave the ROI. Each sample records the velocity used at its
/// position.
pub fn simulate_trajectories(
    field: &ConditionedField,
    roi: &RegionOfInterest,
    initial: &Frame,
    dt: f64,
    n_steps: usize,
    options: RolloutOptions,
) -> Result<Vec<Trajectory>, InferenceError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(ModelError::Frame(format!("time step {dt} must be > 0")).into());
    }
    if n_steps == 0 {
        return Err(ModelError::Frame("n_steps must be >= 1".into()).into());
    }
    if let Some(v) = initial.vehicles().iter().find(|v| !roi.contains(v.x, v.y)) {
        return Err(ModelError::OutsideRoi { x: v.x, y: v.y }.into());
    }
    initial
        .vehicles()
        .par_iter()
        .enumerate()
        .map(|(id, v)| {
            let mut rng = stream(options.seed, &[tag::SIMULATE, id as u64]);
            let mut p = v.position();
            let mut samples = Vec::with_capacity(n_steps + 1);
            for step in 0..=n_steps {
                let vel = velocity_at(field, p, options.velocity, &mut rng);
                samples.push(TrajectorySample {
                    t: initial.timestamp + step as f64 * dt,
                    x: p[0],
                    y: p[1],
                    vx: vel[0],
                    vy: vel[1],
                });
                if step == n_steps {
                    break;
                }
                let drive = match options.integrator {
                    Integrator::Euler => vel,
                    Integrator::Midpoint => {
                        let mid = [p[0] + 0.5 * dt * vel[0], p[1] + 0.5 * dt * vel[1]];
                        velocity_at(field, mid, options.velocity, &mut rng)
                    }
                };
                let next = [p[0] + dt * drive[0], p[1] + dt * drive[1]];
                if !(next[0].is_finite() && next[1].is_finite()) {
                    return Err(InferenceError::NonFinite {
                        vehicle: id,
                        step: step + 1,
                    });
                }
                if !roi.contains(next[0], next[1]) {
                    break;
                }
                p = next;
            }
            Ok(Trajectory {
                vehicle_id: id,
                samples,
            })
        })
        .collect()
}

//! MAP-assignment Gibbs sampler over motion patterns.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::seq::index::sample as sample_indices;
use rand::Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::empirical::FrameDistributions;
use crate::error::InferenceError;
use crate::gp::{training_data, ConditionedField};
use crate::model::{
    validate_state, Frame, KernelParams, MixtureState, MotionPattern, PatternId, PointRef, PriorConfig,
};
use crate::rng::{stream, tag};

use super::alpha::{sample_alpha, AlphaGrid};
use super::crp::crp_log_prior;
use super::length_scale::{draw_length_scale, mh_length_scale_sweep, LengthScaleTarget};
use super::likelihood::{frame_velocity_log_likelihood, new_pattern_velocity_log_likelihood};

/// How a frame's new pattern is chosen from its posterior scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AssignmentRule {
    /// Argmax, ties to the lowest pattern id, new pattern only on a strict win.
    #[default]
    Map,
    /// Categorical draw from the normalized scores.
    Sample,
}

/// Everything the sampler needs beyond the data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GibbsConfig {
    pub prior: PriorConfig,
    pub sigma_n_sq: f64,
    pub mh_step: f64,
    pub alpha_grid: AlphaGrid,
    pub assignment: AssignmentRule,
    /// Largest number of points a pattern's GP is conditioned on.
    pub max_training_points: usize,
}

impl GibbsConfig {
    pub const DEFAULT_SIGMA_N_SQ: f64 = 1.0;
    pub const DEFAULT_MH_STEP: f64 = 0.2;
    pub const DEFAULT_MAX_TRAINING_POINTS: usize = 1000;

    pub fn new(prior: PriorConfig) -> Self {
        GibbsConfig {
            prior,
            sigma_n_sq: Self::DEFAULT_SIGMA_N_SQ,
            mh_step: Self::DEFAULT_MH_STEP,
            alpha_grid: AlphaGrid::default(),
            assignment: AssignmentRule::Map,
            max_training_points: Self::DEFAULT_MAX_TRAINING_POINTS,
        }
    }

    pub fn validate(&self) -> Result<(), InferenceError> {
        self.prior.validate()?;
        let bad = |m: String| Err(InferenceError::Model(crate::error::ModelError::Prior(m)));
        if !(self.sigma_n_sq >= 0.0 && self.sigma_n_sq.is_finite()) {
            return bad(format!("sigma_n_sq = {} must be >= 0", self.sigma_n_sq));
        }
        if !(self.mh_step > 0.0 && self.mh_step.is_finite()) {
            return bad(format!("mh_step = {} must be > 0", self.mh_step));
        }
        if self.max_training_points == 0 {
            return bad("max_training_points must be >= 1".into());
        }
        self.alpha_grid
            .validate()
            .or_else(|m| bad(m))
    }

    /// Kernel parameters of a pattern with the given length scales.
    pub fn kernel(&self, w: [f64; 2]) -> KernelParams {
        let s2 = self.prior.sigma0_sq();
        KernelParams {
            sigma_sq_x: s2[0],
            sigma_sq_y: s2[1],
            w_x: w[0],
            w_y: w[1],
            sigma_n_sq: self.sigma_n_sq,
        }
    }
}

/// One assignment option.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Candidate {
    Existing(PatternId),
    New,
}

/// Posterior scores of every assignment option for one frame. Existing
/// patterns come first in increasing id order, the new-pattern option last.
#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentScores {
    pub candidates: Vec<Candidate>,
    pub log_prior: Vec<f64>,
    pub log_velocity: Vec<f64>,
    /// Count and position factors, shared by every option.
    pub log_base: f64,
}

impl AssignmentScores {
    /// Unnormalized log posterior of option `j`, without the shared factors.
    pub fn score(&self, j: usize) -> f64 {
        self.log_prior[j] + self.log_velocity[j]
    }

    pub fn scores(&self) -> Vec<f64> {
        (0..self.candidates.len()).map(|j| self.score(j)).collect()
    }

    /// Full log-likelihood of option `j` (velocity plus count and position).
    pub fn log_likelihood(&self, j: usize) -> f64 {
        self.log_velocity[j] + self.log_base
    }

    /// Argmax index: the first maximum among existing patterns, the new
    /// option only if strictly better.
    pub fn map_index(&self) -> usize {
        let mut best = 0;
        let mut best_score = f64::NEG_INFINITY;
        for j in 0..self.candidates.len() {
            let s = self.score(j);
            if s > best_score || (j == 0 && s == best_score) {
                best = j;
                best_score = s;
            }
        }
        best
    }

    /// Normalized posterior probabilities.
    pub fn probabilities(&self) -> Vec<f64> {
        let s = self.scores();
        let peak = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = s.iter().map(|x| (x - peak).exp()).collect();
        let total: f64 = e.iter().sum();
        e.into_iter().map(|x| x / total).collect()
    }

    fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let p = self.probabilities();
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (j, pj) in p.iter().enumerate() {
            acc += pj;
            if u < acc {
                return j;
            }
        }
        p.iter().rposition(|&x| x > 0.0).unwrap_or(0)
    }
}

/// Summary of one completed Gibbs iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: usize,
    pub k: usize,
    pub alpha: f64,
    pub counts: Vec<(PatternId, usize)>,
    /// Sum over frames of the log-likelihood under the chosen option.
    pub log_likelihood: f64,
    /// Wall-clock duration; not serialized so saved runs stay reproducible.
    #[serde(skip)]
    pub seconds: f64,
}

pub type GibbsTrace = Vec<TraceRecord>;

/// Every point of the given frames, in frame then vehicle order.
pub fn member_points<'a>(
    members: impl IntoIterator<Item = &'a usize>,
    frames: &[Frame],
) -> Vec<PointRef> {
    members
        .into_iter()
        .flat_map(|&f| {
            (0..frames[f].len()).map(move |v| PointRef {
                frame: f as u32,
                vehicle: v as u32,
            })
        })
        .collect()
}

/// All member points if there are at most `cap`, otherwise a uniform subsample
/// of size `cap` kept in frame then vehicle order.
pub fn select_training<R: Rng + ?Sized>(
    pattern: &MotionPattern,
    frames: &[Frame],
    cap: usize,
    rng: &mut R,
) -> Vec<PointRef> {
    let all = member_points(&pattern.members, frames);
    if all.len() <= cap {
        return all;
    }
    let mut idx = sample_indices(rng, all.len(), cap).into_vec();
    idx.sort_unstable();
    idx.into_iter().map(|i| all[i]).collect()
}

/// Gibbs sampler over frame assignments, pattern length scales and α.
#[derive(Debug, Clone)]
pub struct GibbsSampler<'a> {
    frames: &'a [Frame],
    dists: &'a FrameDistributions,
    config: GibbsConfig,
    state: MixtureState,
    fields: BTreeMap<PatternId, ConditionedField>,
    base: Vec<f64>,
    iteration: usize,
}

impl<'a> GibbsSampler<'a> {
    /// Initial state: every frame in pattern 1 with gamma-drawn length scales,
    /// and `1/α ~ Γ(1, 1)`.
    pub fn new(
        frames: &'a [Frame],
        dists: &'a FrameDistributions,
        config: GibbsConfig,
    ) -> Result<Self, InferenceError> {
        config.validate()?;
        if frames.is_empty() {
            return Err(crate::error::ModelError::EmptyDataset.into());
        }
        let prior = &config.prior;
        let mut rng = stream(prior.rng_seed, &[tag::INIT]);
        let w = [
            draw_length_scale(prior.a, prior.b, &mut rng),
            draw_length_scale(prior.a, prior.b, &mut rng),
        ];
        let inv_alpha: f64 = Exp1.sample(&mut rng);
        let id = PatternId(1);
        let mut pattern = MotionPattern {
            id,
            members: (0..frames.len()).collect(),
            params: config.kernel(w),
            prior_mean: prior.mu0(),
            training: Vec::new(),
        };
        pattern.training = select_training(&pattern, frames, config.max_training_points, &mut rng);
        let state = MixtureState {
            assignments: vec![id; frames.len()],
            patterns: BTreeMap::from([(id, pattern)]),
            alpha: 1.0 / inv_alpha,
            next_id: 2,
        };
        Self::from_state(frames, dists, config, state, 0)
    }

    /// Resumes from an existing state; fields are conditioned on each
    /// pattern's stored training subset.
    pub fn from_state(
        frames: &'a [Frame],
        dists: &'a FrameDistributions,
        config: GibbsConfig,
        state: MixtureState,
        iteration: usize,
    ) -> Result<Self, InferenceError> {
        config.validate()?;
        if state.n() != frames.len() {
            return Err(InferenceError::State(format!(
                "state covers {} frames, dataset has {}",
                state.n(),
                frames.len()
            )));
        }
        if let Some(v) = validate_state(&state).first() {
            return Err(InferenceError::State(v.to_string()));
        }
        let fields = build_fields(&state, frames)?;
        let base = frames
            .iter()
            .map(|f| dists.frame_log_prob(f))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(GibbsSampler {
            frames,
            dists,
            config,
            state,
            fields,
            base,
            iteration,
        })
    }

    pub fn state(&self) -> &MixtureState {
        &self.state
    }

    pub fn into_state(self) -> MixtureState {
        self.state
    }

    pub fn config(&self) -> &GibbsConfig {
        &self.config
    }

    pub fn frames(&self) -> &[Frame] {
        self.frames
    }

    pub fn dists(&self) -> &FrameDistributions {
        self.dists
    }

    pub fn field(&self, id: PatternId) -> Option<&ConditionedField> {
        self.fields.get(&id)
    }

    /// Number of completed iterations.
    pub fn iteration(&self) -> usize {
        self.iteration
    }

    /// Scores of every option for frame `i`, with frame `i` held out of its
    /// current pattern.
    pub fn assignment_posterior(&self, i: usize) -> Result<AssignmentScores, InferenceError> {
        let frame = self
            .frames
            .get(i)
            .ok_or_else(|| InferenceError::State(format!("frame {i} out of range")))?;
        let current = self.state.assignments[i];
        let n = self.state.n();
        let entries: Vec<(PatternId, usize, Vec<usize>)> = self
            .state
            .patterns
            .values()
            .map(|p| {
                if p.id == current {
                    let exclude = p
                        .training
                        .iter()
                        .enumerate()
                        .filter(|(_, r)| r.frame as usize == i)
                        .map(|(j, _)| j)
                        .collect();
                    (p.id, p.count() - 1, exclude)
                } else {
                    (p.id, p.count(), Vec::new())
                }
            })
            .collect();
        let counts: Vec<usize> = entries.iter().map(|e| e.1).collect();
        let log_prior = crp_log_prior(&counts, self.state.alpha, n);

        let mut log_velocity: Vec<f64> = entries
            .par_iter()
            .map(|(id, count, exclude)| {
                if *count == 0 {
                    return Ok(f64::NEG_INFINITY);
                }
                frame_velocity_log_likelihood(frame, &self.fields[id], exclude)
                    .map_err(InferenceError::in_pattern(*id))
            })
            .collect::<Result<_, _>>()?;
        let mut rng = stream(
            self.config.prior.rng_seed,
            &[tag::ASSIGN, self.iteration as u64, i as u64],
        );
        log_velocity.push(new_pattern_velocity_log_likelihood(
            frame,
            &self.config.prior,
            self.config.sigma_n_sq,
            &mut rng,
        )?);

        let mut candidates: Vec<Candidate> = entries.iter().map(|e| Candidate::Existing(e.0)).collect();
        candidates.push(Candidate::New);
        Ok(AssignmentScores {
            candidates,
            log_prior,
            log_velocity,
            log_base: self.base[i],
        })
    }

    /// Reassigns frame `i` and returns the log-likelihood of the chosen option.
    pub fn update_assignment(&mut self, i: usize) -> Result<f64, InferenceError> {
        let scores = self.assignment_posterior(i)?;
        let mut rng = stream(
            self.config.prior.rng_seed,
            &[tag::ASSIGN, self.iteration as u64, i as u64, 1],
        );
        let j = match self.config.assignment {
            AssignmentRule::Map => scores.map_index(),
            AssignmentRule::Sample => scores.sample_index(&mut rng),
        };
        let chosen = scores.log_likelihood(j);
        let current = self.state.assignments[i];
        let alone = self.state.patterns[&current].count() == 1;
        match scores.candidates[j] {
            Candidate::Existing(id) if id == current => {}
            // A sole member choosing a fresh pattern keeps its own.
            Candidate::New if alone => {}
            target => {
                self.detach(i, current)?;
                match target {
                    Candidate::Existing(id) => self.attach(i, id, &mut rng)?,
                    Candidate::New => self.open_pattern(i, &mut rng)?,
                }
            }
        }
        Ok(chosen)
    }

    fn detach(&mut self, i: usize, id: PatternId) -> Result<(), InferenceError> {
        let pattern = self.state.patterns.get_mut(&id).expect("assigned pattern exists");
        pattern.members.remove(&i);
        if pattern.members.is_empty() {
            self.state.patterns.remove(&id);
            self.fields.remove(&id);
            return Ok(());
        }
        let drop: Vec<usize> = pattern
            .training
            .iter()
            .enumerate()
            .filter(|(_, r)| r.frame as usize == i)
            .map(|(j, _)| j)
            .collect();
        for &j in drop.iter().rev() {
            pattern.training.remove(j);
        }
        self.fields
            .get_mut(&id)
            .expect("field cached for every pattern")
            .remove_points(&drop)
            .map_err(InferenceError::in_pattern(id))
    }

    /// Adds frame `i` to an existing pattern, keeping the training set a
    /// uniform reservoir sample once it reaches the cap.
    fn attach<R: Rng + ?Sized>(&mut self, i: usize, id: PatternId, rng: &mut R) -> Result<(), InferenceError> {
        let cap = self.config.max_training_points;
        let frames = self.frames;
        let pattern = self.state.patterns.get_mut(&id).expect("candidate pattern exists");
        let field = self.fields.get_mut(&id).expect("field cached for every pattern");
        let mut total: usize = pattern.members.iter().map(|&m| frames[m].len()).sum();
        pattern.members.insert(i);
        self.state.assignments[i] = id;
        for (v, veh) in frames[i].vehicles().iter().enumerate() {
            total += 1;
            let r = PointRef {
                frame: i as u32,
                vehicle: v as u32,
            };
            if pattern.training.len() >= cap {
                if rng.random::<f64>() >= cap as f64 / total as f64 {
                    continue;
                }
                let evict = rng.random_range(0..pattern.training.len());
                pattern.training.remove(evict);
                field
                    .remove_points(&[evict])
                    .map_err(InferenceError::in_pattern(id))?;
            }
            pattern.training.push(r);
            field
                .push_points(&[veh.position()], [&[veh.vx], &[veh.vy]])
                .map_err(InferenceError::in_pattern(id))?;
        }
        Ok(())
    }

    fn open_pattern<R: Rng + ?Sized>(&mut self, i: usize, rng: &mut R) -> Result<(), InferenceError> {
        let prior = &self.config.prior;
        let id = PatternId(self.state.next_id);
        self.state.next_id += 1;
        let w = [
            draw_length_scale(prior.a, prior.b, rng),
            draw_length_scale(prior.a, prior.b, rng),
        ];
        let mut pattern = MotionPattern {
            id,
            members: [i].into(),
            params: self.config.kernel(w),
            prior_mean: prior.mu0(),
            training: Vec::new(),
        };
        pattern.training = select_training(&pattern, self.frames, self.config.max_training_points, rng);
        let field = ConditionedField::from_pattern(&pattern, self.frames).map_err(InferenceError::in_pattern(id))?;
        self.state.assignments[i] = id;
        self.state.patterns.insert(id, pattern);
        self.fields.insert(id, field);
        Ok(())
    }

    /// One pass over all frames in index order. Returns the summed
    /// log-likelihood of the chosen options.
    pub fn sweep(&mut self) -> Result<f64, InferenceError> {
        let mut total = 0.0;
        for i in 0..self.frames.len() {
            total += self.update_assignment(i)?;
        }
        Ok(total)
    }

    /// Resamples every pattern's length scales (one MH step per axis on a fresh
    /// training subsample), then α.
    pub fn update_parameters(&mut self) -> Result<(), InferenceError> {
        let seed = self.config.prior.rng_seed;
        let iter = self.iteration as u64;
        let frames = self.frames;
        let config = &self.config;
        let updates: Vec<(PatternId, Vec<PointRef>, ConditionedField)> = self
            .state
            .patterns
            .values()
            .collect::<Vec<_>>()
            .par_iter()
            .map(|p| {
                let mut rng = stream(seed, &[tag::LENGTH_SCALES, iter, p.id.0 as u64]);
                let mut next = (*p).clone();
                next.training = select_training(p, frames, config.max_training_points, &mut rng);
                let (points, values) = training_data(&next, frames).map_err(InferenceError::in_pattern(p.id))?;
                let target = LengthScaleTarget {
                    points: &points,
                    values: [&values[0], &values[1]],
                    prior_mean: p.prior_mean,
                    a: config.prior.a,
                    b: config.prior.b,
                };
                let field = target.field(p.params).map_err(InferenceError::in_pattern(p.id))?;
                let (field, _) = mh_length_scale_sweep(&target, field, config.mh_step, &mut rng);
                Ok((p.id, next.training, field))
            })
            .collect::<Result<_, InferenceError>>()?;
        for (id, training, field) in updates {
            let p = self.state.patterns.get_mut(&id).expect("pattern exists");
            p.training = training;
            p.params = *field.params();
            self.fields.insert(id, field);
        }
        let mut rng = stream(seed, &[tag::ALPHA, iter]);
        self.state.alpha = sample_alpha(self.state.k(), self.state.n(), &self.config.alpha_grid, &mut rng);
        Ok(())
    }

    /// One full iteration: sweep, parameter update, trace record.
    pub fn step(&mut self) -> Result<TraceRecord, InferenceError> {
        let start = Instant::now();
        let log_likelihood = self.sweep()?;
        self.update_parameters()?;
        self.iteration += 1;
        if let Some(v) = validate_state(&self.state).first() {
            return Err(InferenceError::State(v.to_string()));
        }
        Ok(TraceRecord {
            iteration: self.iteration,
            k: self.state.k(),
            alpha: self.state.alpha,
            counts: self.state.counts().into_iter().collect(),
            log_likelihood,
            seconds: start.elapsed().as_secs_f64(),
        })
    }
}

fn build_fields(
    state: &MixtureState,
    frames: &[Frame],
) -> Result<BTreeMap<PatternId, ConditionedField>, InferenceError> {
    state
        .patterns
        .values()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|p| {
            ConditionedField::from_pattern(p, frames)
                .map(|f| (p.id, f))
                .map_err(InferenceError::in_pattern(p.id))
        })
        .collect()
}

/// Result of a completed run.
#[derive(Debug, Clone, PartialEq)]
pub struct GibbsOutcome {
    pub state: MixtureState,
    pub trace: GibbsTrace,
}

/// A run that failed part-way, with the trace of the iterations that finished.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("Gibbs iteration {} failed: {error}", trace.len() + 1)]
pub struct GibbsFailure {
    #[source]
    pub error: InferenceError,
    pub trace: GibbsTrace,
}

/// Initializes and runs `config.prior.n_gibbs` iterations, calling `observer`
/// after each one.
pub fn run_gibbs(
    frames: &[Frame],
    dists: &FrameDistributions,
    config: GibbsConfig,
    mut observer: impl FnMut(&TraceRecord),
) -> Result<GibbsOutcome, GibbsFailure> {
    let mut trace = GibbsTrace::new();
    let mut sampler = match GibbsSampler::new(frames, dists, config) {
        Ok(s) => s,
        Err(error) => return Err(GibbsFailure { error, trace }),
    };
    for _ in 0..config.prior.n_gibbs {
        match sampler.step() {
            Ok(rec) => {
                observer(&rec);
                trace.push(rec);
            }
            Err(error) => return Err(GibbsFailure { error, trace }),
        }
    }
    Ok(GibbsOutcome {
        state: sampler.into_state(),
        trace,
    })
}

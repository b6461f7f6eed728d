//! A fitted mixture together with everything needed to use it.

use std::collections::BTreeMap;

use crate::empirical::FrameDistributions;
use crate::error::InferenceError;
use crate::gp::{field_on_grid, ConditionedField, VectorField};
use crate::inference::{run_gibbs, GibbsConfig, GibbsFailure, GibbsSampler, GibbsTrace, TraceRecord};
use crate::model::{validate_state, Frame, MixtureState, PatternId, RegionOfInterest};

/// Dataset, fitted distributions, final sampler state and trace.
///
/// Pattern fields are conditioned on each pattern's stored training subset,
/// so a model loaded from disk behaves exactly like the one that was saved.
#[derive(Debug, Clone)]
pub struct FittedModel {
    pub roi: RegionOfInterest,
    pub config: GibbsConfig,
    pub dists: FrameDistributions,
    pub frames: Vec<Frame>,
    pub state: MixtureState,
    pub trace: GibbsTrace,
    fields: BTreeMap<PatternId, ConditionedField>,
}

impl PartialEq for FittedModel {
    fn eq(&self, other: &Self) -> bool {
        self.roi == other.roi
            && self.config == other.config
            && self.dists == other.dists
            && self.frames == other.frames
            && self.state == other.state
            && self.trace.len() == other.trace.len()
            && self.trace.iter().zip(&other.trace).all(|(a, b)| {
                // Durations are not persisted.
                TraceRecord { seconds: 0.0, ..a.clone() } == TraceRecord { seconds: 0.0, ..b.clone() }
            })
    }
}

impl FittedModel {
    pub fn new(
        roi: RegionOfInterest,
        config: GibbsConfig,
        dists: FrameDistributions,
        frames: Vec<Frame>,
        state: MixtureState,
        trace: GibbsTrace,
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
        let mut fields = BTreeMap::new();
        for p in state.patterns.values() {
            let f = ConditionedField::from_pattern(p, &frames).map_err(InferenceError::in_pattern(p.id))?;
            fields.insert(p.id, f);
        }
        Ok(FittedModel {
            roi,
            config,
            dists,
            frames,
            state,
            trace,
            fields,
        })
    }

    /// Fits the empirical distributions and runs the sampler.
    pub fn fit(
        frames: Vec<Frame>,
        roi: RegionOfInterest,
        config: GibbsConfig,
        observer: impl FnMut(&TraceRecord),
    ) -> Result<Self, GibbsFailure> {
        let fail = |error: InferenceError| GibbsFailure {
            error,
            trace: Vec::new(),
        };
        let dists = FrameDistributions::fit(&frames, &roi).map_err(|e| fail(e.into()))?;
        let out = run_gibbs(&frames, &dists, config, observer)?;
        let trace = out.trace.clone();
        FittedModel::new(roi, config, dists, frames, out.state, out.trace)
            .map_err(|error| GibbsFailure { error, trace })
    }

    pub fn field(&self, id: PatternId) -> Option<&ConditionedField> {
        self.fields.get(&id)
    }

    pub fn pattern_ids(&self) -> Vec<PatternId> {
        self.state.patterns.keys().copied().collect()
    }

    /// Pattern with the most member frames, lowest id on ties.
    pub fn largest_pattern(&self) -> PatternId {
        self.state.proportions()[0].0
    }

    /// Posterior mean and variance of a pattern's field on an `nx` x `ny` grid.
    pub fn mean_field(&self, id: PatternId, nx: usize, ny: usize) -> Result<VectorField, InferenceError> {
        let field = self
            .field(id)
            .ok_or_else(|| InferenceError::State(format!("no pattern with id {id}")))?;
        field_on_grid(field, &self.roi, nx, ny).map_err(InferenceError::in_pattern(id))
    }

    /// A sampler positioned after the last recorded iteration.
    pub fn resume(&self) -> Result<GibbsSampler<'_>, InferenceError> {
        GibbsSampler::from_state(&self.frames, &self.dists, self.config, self.state.clone(), self.trace.len())
    }
}

//! Gibbs inference for the Dirichlet-process mixture of GP motion patterns.

pub mod alpha;
pub mod crp;
pub mod length_scale;
pub mod likelihood;
pub mod sampler;

pub use alpha::{alpha_log_density, sample_alpha, AlphaGrid};
pub use crp::{crp_log_predictive, crp_log_prior};
pub use length_scale::{gamma_log_pdf, mh_log_acceptance, mh_length_scale_sweep, LengthScaleTarget};
pub use likelihood::{
    frame_log_likelihood, frame_velocity_log_likelihood, new_pattern_log_likelihood,
    new_pattern_velocity_log_likelihood, prior_velocity_log_density,
};
pub use sampler::{
    run_gibbs, AssignmentRule, AssignmentScores, Candidate, GibbsConfig, GibbsFailure, GibbsOutcome,
    GibbsSampler, GibbsTrace, TraceRecord,
};

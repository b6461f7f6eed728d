//! Dirichlet-process mixtures of Gaussian-process velocity fields for
//! multi-vehicle traffic scenes.

pub mod empirical;
pub mod error;
pub mod fitted;
pub mod gp;
pub mod inference;
pub mod io;
pub mod metrics;
pub mod model;
pub mod rng;
pub mod simulate;
pub mod synth;

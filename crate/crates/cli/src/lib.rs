//! Command-line front end for fitting and using DP-GP motion-pattern models.

pub mod commands;
pub mod config;
pub mod error;

use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dpgp_core::inference::AssignmentRule;
use dpgp_core::simulate::{Integrator, RolloutOptions, VelocitySource};

use crate::commands::SimulateArgs;
use crate::config::{FitConfig, SynthConfig};
pub use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "dpgp", version, about = "Learn and use Dirichlet-process Gaussian-process motion patterns")]
pub struct Cli {
    /// Worker threads (0 = all cores). Results do not depend on this.
    #[arg(long, global = true, default_value_t = 0)]
    pub workers: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a mixture to a trajectory CSV.
    Fit(FitArgs),
    /// Classify a test frame (or generate one) and roll out trajectories.
    Simulate(SimulateCli),
    /// Write a pattern's mean velocity field on a grid.
    ExportField(ExportFieldArgs),
    /// Write a synthetic trajectory dataset with ground-truth labels.
    Synth(SynthArgs),
    /// Summarize a model file.
    Inspect {
        model: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum AssignmentArg {
    Map,
    Sample,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub n_gibbs: Option<usize>,
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long)]
    pub n_mc: Option<usize>,
    #[arg(long)]
    pub sigma_n_sq: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub max_frames: Option<usize>,
    #[arg(long, value_enum)]
    pub assignment: Option<AssignmentArg>,
}

impl FitArgs {
    pub fn resolve(&self) -> Result<FitConfig, CliError> {
        let mut c: FitConfig = config::load(self.config.as_deref())?;
        macro_rules! set {
            ($($f:ident),*) => {$(
                if let Some(v) = self.$f.clone() {
                    c.$f = v;
                }
            )*};
        }
        set!(out, seed, n_gibbs, a, b, n_mc, sigma_n_sq, dt, max_frames);
        if let Some(p) = &self.input {
            c.input = Some(p.clone());
        }
        if let Some(a) = self.assignment {
            c.assignment = match a {
                AssignmentArg::Map => AssignmentRule::Map,
                AssignmentArg::Sample => AssignmentRule::Sample,
            };
        }
        Ok(c)
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum IntegratorArg {
    Euler,
    Midpoint,
}

#[derive(Debug, Args)]
pub struct SimulateCli {
    #[arg(long)]
    pub model: PathBuf,
    /// Test frame CSV with columns x,y,vx,vy.
    #[arg(long, conflicts_with = "generate", required_unless_present = "generate")]
    pub frame: Option<PathBuf>,
    /// Draw the initial frame from a pattern instead of reading one.
    #[arg(long)]
    pub generate: bool,
    /// Pattern to generate from (default: the largest).
    #[arg(long, requires = "generate")]
    pub pattern: Option<u32>,
    #[arg(long, default_value_t = 0.5)]
    pub dt: f64,
    #[arg(long, default_value_t = 20)]
    pub steps: usize,
    #[arg(long, value_enum, default_value = "euler")]
    pub integrator: IntegratorArg,
    /// Draw velocities from the posterior instead of using its mean.
    #[arg(long)]
    pub sampled: bool,
    /// Defaults to the model's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

/// `NXxNY`, e.g. `40x30`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid(pub usize, pub usize);

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (a, b) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected NXxNY, got `{s}`"))?;
        let parse = |t: &str| t.parse::<usize>().ok().filter(|n| *n > 0).ok_or(format!("bad grid size `{t}`"));
        Ok(Grid(parse(a)?, parse(b)?))
    }
}

#[derive(Debug, Args)]
pub struct ExportFieldArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub pattern: u32,
    #[arg(long, default_value = "20x20")]
    pub grid: Grid,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub n_frames: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Fit(args) => {
            let mut cfg = args.resolve()?;
            commands::fit(&mut cfg).map(|_| ())
        }
        Command::Simulate(s) => {
            let model = commands::load(&s.model)?;
            let args = SimulateArgs {
                test_frame: s.frame,
                pattern: s.pattern,
                dt: s.dt,
                steps: s.steps,
                options: RolloutOptions {
                    integrator: match s.integrator {
                        IntegratorArg::Euler => Integrator::Euler,
                        IntegratorArg::Midpoint => Integrator::Midpoint,
                    },
                    velocity: if s.sampled { VelocitySource::Sampled } else { VelocitySource::Mean },
                    seed: s.seed.unwrap_or(model.config.prior.rng_seed),
                },
                out: s.out,
            };
            commands::simulate(&model, &args)
        }
        Command::ExportField(e) => {
            let model = commands::load(&e.model)?;
            commands::export_field_cmd(&model, e.pattern, e.grid.0, e.grid.1, &e.out)
        }
        Command::Synth(s) => {
            let mut cfg: SynthConfig = config::load(s.config.as_deref())?;
            if let Some(n) = s.n_frames {
                cfg.spec.n_frames = n;
            }
            if let Some(seed) = s.seed {
                cfg.spec.seed = seed;
            }
            let out = s.out.or(cfg.out.clone()).unwrap_or_else(|| PathBuf::from("synth"));
            commands::synth(&cfg, &out)
        }
        Command::Inspect { model } => {
            let model = commands::load(&model)?;
            commands::inspect(&model, std::io::stdout().lock()).map_err(|e| CliError::Ingest(e.to_string()))
        }
    }
}

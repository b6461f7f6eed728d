//! Run configuration: a TOML file plus command-line overrides.

use std::path::{Path, PathBuf};

use dpgp_core::inference::AssignmentRule;
use dpgp_core::io::{IngestConfig, TrajectoryRecord};
use dpgp_core::model::RegionOfInterest;
use dpgp_core::synth::SynthSpec;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoiConfig {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    #[serde(default = "default_bins")]
    pub n_bins_x: usize,
    #[serde(default = "default_bins")]
    pub n_bins_y: usize,
}

fn default_bins() -> usize {
    RegionOfInterest::DEFAULT_BINS
}

impl RoiConfig {
    pub fn to_roi(&self) -> Result<RegionOfInterest, CliError> {
        RegionOfInterest::new(self.x_min, self.x_max, self.y_min, self.y_max, self.n_bins_x, self.n_bins_y)
            .map_err(|e| CliError::Config(e.to_string()))
    }

    /// Bounding box of the records, widened where it is degenerate.
    pub fn bounding(records: &[TrajectoryRecord]) -> Option<Self> {
        let first = records.first()?;
        let mut b = [first.x, first.x, first.y, first.y];
        for r in records {
            b[0] = b[0].min(r.x);
            b[1] = b[1].max(r.x);
            b[2] = b[2].min(r.y);
            b[3] = b[3].max(r.y);
        }
        for (lo, hi) in [(0, 1), (2, 3)] {
            if b[hi] <= b[lo] {
                b[lo] -= 0.5;
                b[hi] += 0.5;
            }
        }
        Some(RoiConfig {
            x_min: b[0],
            x_max: b[1],
            y_min: b[2],
            y_max: b[3],
            n_bins_x: default_bins(),
            n_bins_y: default_bins(),
        })
    }
}

/// Everything `fit` needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub input: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: u64,
    /// Frame spacing in seconds.
    pub dt: f64,
    pub max_frames: usize,
    pub a: f64,
    pub b: f64,
    pub sigma_n_sq: f64,
    pub n_gibbs: usize,
    pub n_mc: usize,
    pub mh_step: f64,
    pub assignment: AssignmentRule,
    pub max_training_points: usize,
    pub roi: Option<RoiConfig>,
    pub ingest: IngestConfig,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            input: None,
            out: PathBuf::from("dpgp-run"),
            seed: 0,
            dt: 0.5,
            max_frames: 1000,
            a: 10.0,
            b: 1.0,
            sigma_n_sq: 1.0,
            n_gibbs: 100,
            n_mc: 50,
            mh_step: 0.2,
            assignment: AssignmentRule::Map,
            max_training_points: 1000,
            roi: None,
            ingest: IngestConfig::default(),
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        let fail = |m: String| Err(CliError::Config(m));
        if self.input.is_none() {
            return fail("no input file given (set `input` or pass --input)".into());
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return fail(format!("dt = {} must be > 0", self.dt));
        }
        if self.max_frames == 0 {
            return fail("max_frames must be >= 1".into());
        }
        Ok(())
    }
}

/// Reads a TOML config file, or the defaults when `path` is `None`.
pub fn load<T: Default + for<'de> Deserialize<'de>>(path: Option<&Path>) -> Result<T, CliError> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Written next to fit outputs; together with the input file it reproduces
/// the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub dpgp_version: String,
    pub frames: usize,
    pub records: usize,
    pub rejected_rows: usize,
    pub config: FitConfig,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub out: Option<PathBuf>,
    #[serde(flatten)]
    pub spec: SynthSpec,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_config_round_trips_through_toml() {
        let mut c = FitConfig {
            input: Some("data.csv".into()),
            roi: Some(RoiConfig {
                x_min: 0.0,
                x_max: 1.5,
                y_min: -2.0,
                y_max: 3.0,
                n_bins_x: 4,
                n_bins_y: 5,
            }),
            ..FitConfig::default()
        };
        c.ingest.columns.vx = Some("v_Vel".into());
        let text = toml::to_string(&c).unwrap();
        let back: FitConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn partial_file_keeps_defaults() {
        let c: FitConfig = toml::from_str("n_gibbs = 7\n[ingest]\nlength_unit = \"ft\"\n").unwrap();
        assert_eq!(c.n_gibbs, 7);
        assert_eq!(c.a, 10.0);
        assert_eq!(c.ingest.length_unit, dpgp_core::io::LengthUnit::Ft);
        assert!(toml::from_str::<FitConfig>("bogus = 1").is_err());
    }

    #[test]
    fn bounding_box() {
        let r = |x, y| TrajectoryRecord {
            vehicle_id: 1,
            t: 0.0,
            x,
            y,
            vx: None,
            vy: None,
        };
        let b = RoiConfig::bounding(&[r(1.0, 2.0), r(-1.0, 2.0)]).unwrap();
        assert_eq!((b.x_min, b.x_max, b.y_min, b.y_max), (-1.0, 1.0, 1.5, 2.5));
        assert!(RoiConfig::bounding(&[]).is_none());
    }
}

//! Concentration-parameter resampling.
//!
//! The conditional `p(α | K, N) ∝ α^{K-3/2} exp(-1/(2α)) Γ(α) / Γ(N+α)` is
//! tabulated on a log-spaced grid and sampled by inverting the piecewise-linear
//! interpolant of the density in `u = ln α`.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

/// Log-spaced evaluation grid for the α conditional.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaGrid {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Default for AlphaGrid {
    fn default() -> Self {
        AlphaGrid {
            min: 1e-3,
            max: 1e3,
            points: 1000,
        }
    }
}

impl AlphaGrid {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.min > 0.0 && self.max > self.min && self.max.is_finite()) {
            return Err(format!(
                "alpha grid needs 0 < min < max, got [{}, {}]",
                self.min, self.max
            ));
        }
        if self.points < 2 {
            return Err("alpha grid needs at least two points".into());
        }
        Ok(())
    }

    /// Grid nodes in `u = ln α`.
    pub fn log_nodes(&self) -> Vec<f64> {
        let (lo, hi) = (self.min.ln(), self.max.ln());
        let step = (hi - lo) / (self.points - 1) as f64;
        (0..self.points).map(|i| lo + step * i as f64).collect()
    }
}

/// Unnormalized `ln p(α | K, N)`.
pub fn alpha_log_density(alpha: f64, k: usize, n: usize) -> f64 {
    (k as f64 - 1.5) * alpha.ln() - 0.5 / alpha + ln_gamma(alpha) - ln_gamma(n as f64 + alpha)
}

/// Draws α given `k` live patterns and `n` frames.
pub fn sample_alpha<R: Rng + ?Sized>(k: usize, n: usize, grid: &AlphaGrid, rng: &mut R) -> f64 {
    let u = grid.log_nodes();
    // Density of u = ln α picks up the Jacobian α.
    let log_f: Vec<f64> = u
        .iter()
        .map(|&ui| alpha_log_density(ui.exp(), k, n) + ui)
        .collect();
    let peak = log_f.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let f: Vec<f64> = log_f.iter().map(|l| (l - peak).exp()).collect();
    let masses: Vec<f64> = (0..u.len() - 1)
        .map(|i| 0.5 * (f[i] + f[i + 1]) * (u[i + 1] - u[i]))
        .collect();
    let total: f64 = masses.iter().sum();

    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut cell = masses.len() - 1;
    for (i, m) in masses.iter().enumerate() {
        if acc + m > target {
            cell = i;
            break;
        }
        acc += m;
    }
    let width = u[cell + 1] - u[cell];
    let (f0, f1) = (f[cell], f[cell + 1]);
    // Mass within the cell as a fraction of its width.
    let c = ((target - acc) / width).clamp(0.0, 0.5 * (f0 + f1));
    let slope = f1 - f0;
    let t = if slope.abs() < 1e-12 * f0.max(f1) {
        if f0 > 0.0 {
            c / f0
        } else {
            0.5
        }
    } else {
        (-f0 + (f0 * f0 + 2.0 * slope * c).max(0.0).sqrt()) / slope
    };
    (u[cell] + t.clamp(0.0, 1.0) * width).exp()
}

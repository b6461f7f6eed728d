//! Frame likelihoods under an existing pattern and under a fresh pattern.
//!
//! Velocities are treated as noisy observations of the latent field, so every
//! density here uses the latent covariance plus `σₙ² I`.

use rand::Rng;
use rayon::prelude::*;

use crate::empirical::FrameDistributions;
use crate::error::{GpError, InferenceError};
use crate::gp::ConditionedField;
use crate::model::{Frame, KernelParams, PriorConfig};

use super::length_scale::draw_length_scale;

/// Velocity term of a frame under a conditioned pattern field, leaving out the
/// training points at `exclude`. An empty effective training set gives the GP
/// prior density.
pub fn frame_velocity_log_likelihood(
    frame: &Frame,
    field: &ConditionedField,
    exclude: &[usize],
) -> Result<f64, GpError> {
    let vx = frame.velocities(crate::model::Axis::X);
    let vy = frame.velocities(crate::model::Axis::Y);
    field.predictive_log_density(&frame.positions(), [&vx, &vy], exclude)
}

/// `log φ(l) + Σ log ψ(x, y) + velocity term`.
pub fn frame_log_likelihood(
    frame: &Frame,
    field: &ConditionedField,
    exclude: &[usize],
    dists: &FrameDistributions,
) -> Result<f64, InferenceError> {
    let base = dists.frame_log_prob(frame)?;
    Ok(base + frame_velocity_log_likelihood(frame, field, exclude)?)
}

/// Velocity density of a frame under the GP prior of a new pattern with the
/// given length scales.
pub fn prior_velocity_log_density(
    frame: &Frame,
    prior: &PriorConfig,
    sigma_n_sq: f64,
    w: [f64; 2],
) -> Result<f64, GpError> {
    let s2 = prior.sigma0_sq();
    let params = KernelParams {
        sigma_sq_x: s2[0],
        sigma_sq_y: s2[1],
        w_x: w[0],
        w_y: w[1],
        sigma_n_sq,
    };
    let field = ConditionedField::prior(params, prior.mu0())?;
    frame_velocity_log_likelihood(frame, &field, &[])
}

/// Draws `n_mc` length-scale pairs from the gamma prior, in order.
pub fn draw_length_scale_pairs<R: Rng + ?Sized>(prior: &PriorConfig, rng: &mut R) -> Vec<[f64; 2]> {
    (0..prior.n_mc)
        .map(|_| {
            let wx = draw_length_scale(prior.a, prior.b, rng);
            let wy = draw_length_scale(prior.a, prior.b, rng);
            [wx, wy]
        })
        .collect()
}

/// `ln (1/n Σ exp(x_j))`, reduced in index order.
pub fn log_mean_exp(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NEG_INFINITY;
    }
    let peak = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if peak == f64::NEG_INFINITY {
        return peak;
    }
    let sum: f64 = xs.iter().map(|x| (x - peak).exp()).sum();
    peak + sum.ln() - (xs.len() as f64).ln()
}

/// Monte-Carlo estimate of the velocity evidence of a frame under a fresh
/// pattern, integrating the length scales against their gamma prior.
pub fn new_pattern_velocity_log_likelihood<R: Rng + ?Sized>(
    frame: &Frame,
    prior: &PriorConfig,
    sigma_n_sq: f64,
    rng: &mut R,
) -> Result<f64, GpError> {
    if prior.n_mc == 0 {
        return Err(GpError::Domain("n_mc must be >= 1".into()));
    }
    let draws = draw_length_scale_pairs(prior, rng);
    let logs: Vec<f64> = draws
        .par_iter()
        .map(|&w| prior_velocity_log_density(frame, prior, sigma_n_sq, w))
        .collect::<Result<_, _>>()?;
    Ok(log_mean_exp(&logs))
}

/// New-pattern likelihood including the count and position factors.
pub fn new_pattern_log_likelihood<R: Rng + ?Sized>(
    frame: &Frame,
    prior: &PriorConfig,
    sigma_n_sq: f64,
    dists: &FrameDistributions,
    rng: &mut R,
) -> Result<f64, InferenceError> {
    let base = dists.frame_log_prob(frame)?;
    Ok(base + new_pattern_velocity_log_likelihood(frame, prior, sigma_n_sq, rng)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{RegionOfInterest, Vehicle};
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn frame(vs: &[(f64, f64, f64, f64)]) -> Frame {
        Frame::new(0, 0.0, vs.iter().map(|&(x, y, vx, vy)| Vehicle::new(x, y, vx, vy)).collect()).unwrap()
    }

    fn prior(n_mc: usize) -> PriorConfig {
        PriorConfig {
            a: 10.0,
            b: 1.0,
            mu0_x: 1.0,
            mu0_y: -1.0,
            sigma0_sq_x: 4.0,
            sigma0_sq_y: 2.0,
            n_mc,
            n_gibbs: 0,
            rng_seed: 0,
        }
    }

    #[test]
    fn single_point_conditioning_matches_scalar_oracle() {
        // Training (0,0) -> (2, 0); test (1, 0.5) -> (1.5, 0.3).
        let p = KernelParams::new(3.0, 1.5, 2.0, 1.0, 0.25).unwrap();
        let field =
            ConditionedField::build(vec![[0.0, 0.0]], [vec![2.0], vec![0.0]], p, [0.5, 0.0]).unwrap();
        let test = frame(&[(1.0, 0.5, 1.5, 0.3)]);
        let got = frame_velocity_log_likelihood(&test, &field, &[]).unwrap();

        let rho = (-(1.0f64 / (2.0 * 4.0)) - 0.25 / 2.0).exp();
        let mut want = 0.0;
        for (s2, mu, v_train, v_test) in [(3.0, 0.5, 2.0, 1.5), (1.5, 0.0, 0.0, 0.3)] {
            let k = s2 * rho;
            let mean = mu + k / (s2 + 0.25) * (v_train - mu);
            let var = s2 - k * k / (s2 + 0.25) + 0.25;
            want += -0.5 * ((2.0 * std::f64::consts::PI * var).ln() + (v_test - mean).powi(2) / var);
        }
        assert_relative_eq!(got, want, epsilon = 1e-12);
    }

    #[test]
    fn empty_training_falls_back_to_prior() {
        let p = KernelParams::new(3.0, 1.5, 2.0, 1.0, 0.25).unwrap();
        let mut field =
            ConditionedField::build(vec![[0.0, 0.0]], [vec![2.0], vec![0.0]], p, [0.5, 0.0]).unwrap();
        let test = frame(&[(1.0, 0.5, 1.5, 0.3), (2.0, 0.0, 0.0, 1.0)]);
        let left_out = frame_velocity_log_likelihood(&test, &field, &[0]).unwrap();
        field.remove_points(&[0]).unwrap();
        let prior_only = frame_velocity_log_likelihood(&test, &field, &[]).unwrap();
        let fresh = ConditionedField::prior(p, [0.5, 0.0]).unwrap();
        let direct = frame_velocity_log_likelihood(&test, &fresh, &[]).unwrap();
        assert_relative_eq!(left_out, direct, epsilon = 1e-12);
        assert_relative_eq!(prior_only, direct, epsilon = 1e-12);
    }

    #[test]
    fn matching_pattern_beats_reversed_pattern() {
        let pts: Vec<[f64; 2]> = (0..6).map(|i| [i as f64 * 2.0, (i % 3) as f64]).collect();
        let f = |p: [f64; 2]| (1.0 + 0.1 * p[1], 0.5 - 0.05 * p[0]);
        let vs: Vec<_> = pts.iter().map(|&p| (p[0], p[1], f(p).0, f(p).1)).collect();
        let train = frame(&vs);
        let params = KernelParams::new(1.0, 1.0, 3.0, 3.0, 0.01).unwrap();
        let same = ConditionedField::build(
            train.positions(),
            [train.velocities(crate::model::Axis::X), train.velocities(crate::model::Axis::Y)],
            params,
            [0.0; 2],
        )
        .unwrap();
        let neg = |v: Vec<f64>| v.into_iter().map(|x| -x).collect::<Vec<_>>();
        let reversed = ConditionedField::build(
            train.positions(),
            [
                neg(train.velocities(crate::model::Axis::X)),
                neg(train.velocities(crate::model::Axis::Y)),
            ],
            params,
            [0.0; 2],
        )
        .unwrap();
        let a = frame_velocity_log_likelihood(&train, &same, &[]).unwrap();
        let b = frame_velocity_log_likelihood(&train, &reversed, &[]).unwrap();
        assert!(a > b, "{a} vs {b}");
    }

    #[test]
    fn single_draw_equals_direct_prior_density() {
        let pr = prior(1);
        let test = frame(&[(1.0, 2.0, 0.5, 0.5), (4.0, 1.0, 1.5, -2.0)]);
        let got = new_pattern_velocity_log_likelihood(&test, &pr, 1.0, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let w = draw_length_scale_pairs(&pr, &mut ChaCha8Rng::seed_from_u64(3))[0];
        let direct = prior_velocity_log_density(&test, &pr, 1.0, w).unwrap();
        assert_eq!(got, direct);
    }

    #[test]
    fn velocities_at_prior_mean_score_higher() {
        let pr = prior(20);
        let at_mean = frame(&[(1.0, 2.0, 1.0, -1.0), (4.0, 1.0, 1.0, -1.0)]);
        let off = frame(&[(1.0, 2.0, 11.0, -1.0 + 5.0 * 2f64.sqrt()), (4.0, 1.0, 11.0, -1.0 + 5.0 * 2f64.sqrt())]);
        let a = new_pattern_velocity_log_likelihood(&at_mean, &pr, 1.0, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let b = new_pattern_velocity_log_likelihood(&off, &pr, 1.0, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert!(a > b);
    }

    #[test]
    fn log_mean_exp_is_stable() {
        assert_relative_eq!(log_mean_exp(&[-1000.0, -1000.0]), -1000.0, epsilon = 1e-12);
        assert_relative_eq!(log_mean_exp(&[0.0, 2f64.ln()]), 1.5f64.ln(), epsilon = 1e-15);
        assert_eq!(log_mean_exp(&[f64::NEG_INFINITY]), f64::NEG_INFINITY);
    }

    #[test]
    fn base_factors_are_added() {
        let roi = RegionOfInterest::new(0.0, 10.0, 0.0, 10.0, 2, 2).unwrap();
        let f = frame(&[(1.0, 1.0, 1.0, -1.0), (6.0, 6.0, 0.0, 0.0)]);
        let dists = FrameDistributions::fit(std::slice::from_ref(&f), &roi).unwrap();
        let pr = prior(3);
        let total = new_pattern_log_likelihood(&f, &pr, 1.0, &dists, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let vel = new_pattern_velocity_log_likelihood(&f, &pr, 1.0, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        // φ(2) = 1, each occupied bin has weight 1/2 over area 25.
        assert_relative_eq!(total - vel, 2.0 * (0.5f64 / 25.0).ln(), epsilon = 1e-12);
    }
}

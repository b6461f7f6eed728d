//! Metropolis-Hastings updates of a pattern's kernel length scales under a
//! gamma prior and the GP marginal likelihood of the pattern's data.

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use statrs::function::gamma::ln_gamma;

use crate::error::GpError;
use crate::gp::ConditionedField;
use crate::model::KernelParams;

/// `ln Γ(w; shape a, scale b)`.
pub fn gamma_log_pdf(w: f64, a: f64, b: f64) -> f64 {
    if w <= 0.0 {
        return f64::NEG_INFINITY;
    }
    (a - 1.0) * w.ln() - w / b - ln_gamma(a) - a * b.ln()
}

/// Draws a length scale from the gamma prior.
pub fn draw_length_scale<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> f64 {
    Gamma::new(a, b)
        .expect("gamma parameters validated by PriorConfig")
        .sample(rng)
}

/// Data and prior a length-scale chain targets.
#[derive(Debug, Clone)]
pub struct LengthScaleTarget<'a> {
    pub points: &'a [[f64; 2]],
    pub values: [&'a [f64]; 2],
    pub prior_mean: [f64; 2],
    pub a: f64,
    pub b: f64,
}

impl LengthScaleTarget<'_> {
    pub fn field(&self, params: KernelParams) -> Result<ConditionedField, GpError> {
        ConditionedField::build(
            self.points.to_vec(),
            [self.values[0].to_vec(), self.values[1].to_vec()],
            params,
            self.prior_mean,
        )
    }

    /// Unnormalized log posterior of `(w_x, w_y)` given a field already
    /// conditioned with those length scales.
    pub fn log_target(&self, field: &ConditionedField) -> f64 {
        let p = field.params();
        gamma_log_pdf(p.w_x, self.a, self.b) + gamma_log_pdf(p.w_y, self.a, self.b) + field.log_marginal()
    }
}

/// Log acceptance ratio of a multiplicative log-normal proposal
/// `current -> proposed`, including the Hastings term `ln(w'/w)`.
pub fn mh_log_acceptance(current_target: f64, proposed_target: f64, w_current: f64, w_proposed: f64) -> f64 {
    proposed_target - current_target + w_proposed.ln() - w_current.ln()
}

/// Outcome of one sweep over both length scales.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LengthScaleStep {
    pub accepted: [bool; 2],
    pub log_acceptance: [f64; 2],
}

/// One MH step on `w_x` followed by one on `w_y`.
///
/// `current` must be conditioned on the target's data with the current
/// parameters. Proposals whose factorization fails are rejected. Returns the
/// field for the accepted parameters.
pub fn mh_length_scale_sweep<R: Rng + ?Sized>(
    target: &LengthScaleTarget<'_>,
    current: ConditionedField,
    step: f64,
    rng: &mut R,
) -> (ConditionedField, LengthScaleStep) {
    let mut field = current;
    let mut log_target = target.log_target(&field);
    let mut out = LengthScaleStep {
        accepted: [false; 2],
        log_acceptance: [f64::NEG_INFINITY; 2],
    };
    for axis in 0..2 {
        let params = *field.params();
        let mut w = params.length_scales();
        let w_cur = w[axis];
        let eps: f64 = StandardNormal.sample(rng);
        let w_prop = w_cur * (step * eps).exp();
        w[axis] = w_prop;
        let u: f64 = rng.random();
        let proposal = match target.field(params.with_length_scales(w)) {
            Ok(f) => f,
            Err(_) => continue,
        };
        let prop_target = target.log_target(&proposal);
        let log_acc = mh_log_acceptance(log_target, prop_target, w_cur, w_prop);
        out.log_acceptance[axis] = log_acc;
        if log_acc >= 0.0 || u.ln() < log_acc {
            field = proposal;
            log_target = prop_target;
            out.accepted[axis] = true;
        }
    }
    (field, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_proposal_is_always_accepted() {
        let pts = [[0.0, 0.0], [1.0, 3.0]];
        let vx = [1.0, 2.0];
        let vy = [0.0, -1.0];
        let target = LengthScaleTarget {
            points: &pts,
            values: [&vx, &vy],
            prior_mean: [0.0; 2],
            a: 10.0,
            b: 1.0,
        };
        let f = target
            .field(KernelParams::new(1.0, 1.0, 4.0, 6.0, 1.0).unwrap())
            .unwrap();
        let t = target.log_target(&f);
        let log_acc = mh_log_acceptance(t, t, 4.0, 4.0);
        assert_eq!(log_acc, 0.0);
        assert_eq!(log_acc.exp().min(1.0), 1.0);
    }

    #[test]
    fn gamma_log_pdf_normalizes() {
        let (a, b) = (10.0, 1.0);
        let h = 1e-3;
        let total: f64 = (1..60_000).map(|i| gamma_log_pdf(i as f64 * h, a, b).exp() * h).sum();
        assert_relative_eq!(total, 1.0, epsilon = 1e-6);
        assert_eq!(gamma_log_pdf(0.0, a, b), f64::NEG_INFINITY);
    }

    #[test]
    fn recovers_planted_length_scale() {
        // 30 frames x 8 points on [0, 40]^2 drawn from a GP with w = 5.
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let n = 240;
        let pts: Vec<[f64; 2]> = (0..n)
            .map(|_| [rng.random_range(0.0..40.0), rng.random_range(0.0..40.0)])
            .collect();
        let truth = KernelParams::new(4.0, 4.0, 5.0, 5.0, 0.05).unwrap();
        let k = crate::gp::kernel_matrix(&pts, &pts, &truth, crate::model::Axis::X, true).unwrap();
        let l = k.cholesky().unwrap().l();
        let draw = |rng: &mut ChaCha8Rng| {
            let z = nalgebra::DVector::from_fn(n, |_, _| StandardNormal.sample(rng));
            (&l * z).iter().copied().collect::<Vec<f64>>()
        };
        let vx = draw(&mut rng);
        let vy = draw(&mut rng);
        let target = LengthScaleTarget {
            points: &pts,
            values: [&vx, &vy],
            prior_mean: [0.0; 2],
            a: 10.0,
            b: 1.0,
        };
        let mut field = target
            .field(KernelParams::new(4.0, 4.0, 12.0, 12.0, 0.05).unwrap())
            .unwrap();
        let mut samples = Vec::new();
        for it in 0..400 {
            let (f, _) = mh_length_scale_sweep(&target, field, 0.2, &mut rng);
            field = f;
            if it >= 100 {
                samples.push(field.params().w_x);
            }
        }
        samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = samples[samples.len() / 2];
        assert!((3.0..=8.0).contains(&median), "median w_x = {median}");
    }
}

//! Gaussian-process numerics for velocity fields.
//!
//! Each velocity component is an independent GP over position with a
//! squared-exponential kernel and a constant prior mean. All conditioning goes
//! through Cholesky factorizations; explicit inverses are never formed.

use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::GpError;
use crate::model::{Axis, Frame, KernelParams, MotionPattern, RegionOfInterest};

/// First jitter level, relative to the signal variance.
pub const JITTER_START: f64 = 1e-10;
/// Number of escalations (x10 each) after the first jitter level.
pub const JITTER_RETRIES: usize = 5;
/// Negative posterior variances down to `-VARIANCE_CLAMP * max(1, σ²)` are
/// rounding noise and get clamped to zero.
pub const VARIANCE_CLAMP: f64 = 1e-9;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

fn check_positive(name: &'static str, value: f64) -> Result<(), GpError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(GpError::Parameter { name, value })
    }
}

#[inline]
fn kernel_raw(p: [f64; 2], q: [f64; 2], sigma_sq: f64, inv_wx2: f64, inv_wy2: f64) -> f64 {
    let dx = p[0] - q[0];
    let dy = p[1] - q[1];
    sigma_sq * (-0.5 * (dx * dx * inv_wx2 + dy * dy * inv_wy2)).exp()
}

/// Squared-exponential covariance between positions `p` and `q`.
pub fn sq_exp_kernel(
    p: [f64; 2],
    q: [f64; 2],
    sigma_sq: f64,
    w_x: f64,
    w_y: f64,
) -> Result<f64, GpError> {
    check_positive("sigma_sq", sigma_sq)?;
    check_positive("w_x", w_x)?;
    check_positive("w_y", w_y)?;
    Ok(kernel_raw(p, q, sigma_sq, 1.0 / (w_x * w_x), 1.0 / (w_y * w_y)))
}

fn check_params(params: &KernelParams) -> Result<(), GpError> {
    check_positive("sigma_sq_x", params.sigma_sq_x)?;
    check_positive("sigma_sq_y", params.sigma_sq_y)?;
    check_positive("w_x", params.w_x)?;
    check_positive("w_y", params.w_y)?;
    if !(params.sigma_n_sq >= 0.0 && params.sigma_n_sq.is_finite()) {
        return Err(GpError::Parameter {
            name: "sigma_n_sq",
            value: params.sigma_n_sq,
        });
    }
    Ok(())
}

fn cross_kernel(a: &[[f64; 2]], b: &[[f64; 2]], sigma_sq: f64, w: [f64; 2]) -> DMatrix<f64> {
    let (ix, iy) = (1.0 / (w[0] * w[0]), 1.0 / (w[1] * w[1]));
    DMatrix::from_fn(a.len(), b.len(), |i, j| kernel_raw(a[i], b[j], sigma_sq, ix, iy))
}

fn self_kernel(a: &[[f64; 2]], sigma_sq: f64, w: [f64; 2], diag: f64) -> DMatrix<f64> {
    let n = a.len();
    let (ix, iy) = (1.0 / (w[0] * w[0]), 1.0 / (w[1] * w[1]));
    let mut m = DMatrix::zeros(n, n);
    for j in 0..n {
        m[(j, j)] = sigma_sq + diag;
        for i in j + 1..n {
            let k = kernel_raw(a[i], a[j], sigma_sq, ix, iy);
            m[(i, j)] = k;
            m[(j, i)] = k;
        }
    }
    m
}

/// Kernel matrix between two point lists for one velocity component.
///
/// With `add_noise` the two lists must be the same and `σₙ²` is added on the
/// diagonal.
pub fn kernel_matrix(
    points_a: &[[f64; 2]],
    points_b: &[[f64; 2]],
    params: &KernelParams,
    axis: Axis,
    add_noise: bool,
) -> Result<DMatrix<f64>, GpError> {
    check_params(params)?;
    if points_a.is_empty() || points_b.is_empty() {
        return Err(GpError::Domain("kernel_matrix needs non-empty point lists".into()));
    }
    let sigma_sq = params.sigma_sq(axis);
    let w = params.length_scales();
    if add_noise {
        if points_a != points_b {
            return Err(GpError::Domain(
                "noise can only be added to a point list's covariance with itself".into(),
            ));
        }
        return Ok(self_kernel(points_a, sigma_sq, w, params.sigma_n_sq));
    }
    Ok(cross_kernel(points_a, points_b, sigma_sq, w))
}

/// Cholesky factor plus the diagonal jitter that was needed to obtain it.
#[derive(Debug, Clone)]
pub struct Factor {
    pub chol: Cholesky<f64, Dyn>,
    pub jitter: f64,
}

/// Factorizes a symmetric matrix, escalating diagonal jitter on failure.
///
/// `scale` sets the jitter unit (`1e-10 * scale`, x10 per retry). With
/// `start_jittered` the plain attempt is skipped.
pub fn factorize(matrix: &DMatrix<f64>, scale: f64, start_jittered: bool) -> Result<Factor, GpError> {
    let n = matrix.nrows();
    let mut tried = Vec::new();
    if !start_jittered {
        if let Some(chol) = Cholesky::new(matrix.clone()) {
            if chol_is_finite(&chol) {
                return Ok(Factor { chol, jitter: 0.0 });
            }
        }
    }
    let mut jitter = JITTER_START * scale;
    for _ in 0..=JITTER_RETRIES {
        tried.push(jitter);
        let mut m = matrix.clone();
        for i in 0..n {
            m[(i, i)] += jitter;
        }
        if let Some(chol) = Cholesky::new(m) {
            if chol_is_finite(&chol) {
                return Ok(Factor { chol, jitter });
            }
        }
        jitter *= 10.0;
    }
    Err(GpError::Conditioning {
        size: n,
        jitter: tried,
    })
}

fn chol_is_finite(chol: &Cholesky<f64, Dyn>) -> bool {
    let l = chol.l_dirty();
    (0..l.nrows()).all(|i| {
        let d = l[(i, i)];
        d.is_finite() && d > 0.0
    })
}

fn half_log_det(chol: &Cholesky<f64, Dyn>) -> f64 {
    let l = chol.l_dirty();
    (0..l.nrows()).map(|i| l[(i, i)].ln()).sum()
}

/// Gaussian posterior over a set of test points for one velocity component.
#[derive(Debug, Clone, PartialEq)]
pub struct Posterior {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl Posterior {
    pub fn variances(&self) -> Vec<f64> {
        self.cov.diagonal().iter().copied().collect()
    }
}

fn clamp_diagonal(cov: &mut DMatrix<f64>, sigma_sq: f64) -> Result<(), GpError> {
    let tol = VARIANCE_CLAMP * sigma_sq.max(1.0);
    for i in 0..cov.nrows() {
        let d = cov[(i, i)];
        if d < 0.0 {
            if d >= -tol {
                cov[(i, i)] = 0.0;
            } else {
                return Err(GpError::Conditioning {
                    size: cov.nrows(),
                    jitter: vec![d],
                });
            }
        }
    }
    Ok(())
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for j in 0..n {
        for i in j + 1..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

/// Posterior of one velocity component at `test_positions` given noisy
/// training observations.
///
/// Returns the latent (noise-free) predictive covariance.
pub fn gp_posterior(
    train_positions: &[[f64; 2]],
    train_velocities: &[f64],
    test_positions: &[[f64; 2]],
    params: &KernelParams,
    axis: Axis,
    prior_mean: f64,
) -> Result<Posterior, GpError> {
    if train_positions.is_empty() {
        return Err(GpError::Domain("gp_posterior needs at least one training point".into()));
    }
    if train_positions.len() != train_velocities.len() {
        return Err(GpError::Domain(format!(
            "{} training positions but {} velocities",
            train_positions.len(),
            train_velocities.len()
        )));
    }
    if test_positions.is_empty() {
        return Err(GpError::Domain("gp_posterior needs at least one test point".into()));
    }
    let mut values = [Vec::new(), Vec::new()];
    values[axis.index()] = train_velocities.to_vec();
    let other = 1 - axis.index();
    values[other] = vec![0.0; train_velocities.len()];
    let mut mean = [0.0; 2];
    mean[axis.index()] = prior_mean;
    let field = ConditionedField::build(train_positions.to_vec(), values, *params, mean)?;
    field.posterior_axis(axis, test_positions, &[])
}

/// Exact multivariate normal log-density `log N(v; mean, cov)`.
pub fn gaussian_log_density(
    v: &DVector<f64>,
    mean: &DVector<f64>,
    cov: &DMatrix<f64>,
) -> Result<f64, GpError> {
    let n = v.len();
    if mean.len() != n || cov.nrows() != n || cov.ncols() != n {
        return Err(GpError::Domain(format!(
            "dimension mismatch: v {}, mean {}, cov {}x{}",
            n,
            mean.len(),
            cov.nrows(),
            cov.ncols()
        )));
    }
    if n == 0 {
        return Ok(0.0);
    }
    let scale = cov.diagonal().iter().map(|d| d.abs()).sum::<f64>() / n as f64;
    let factor = factorize(cov, scale.max(f64::MIN_POSITIVE), false)?;
    Ok(log_density_factored(&factor.chol, &(v - mean)))
}

fn log_density_factored(chol: &Cholesky<f64, Dyn>, residual: &DVector<f64>) -> f64 {
    let n = residual.len();
    let z = chol
        .l_dirty()
        .solve_lower_triangular(residual)
        .expect("Cholesky factor has a positive diagonal");
    -0.5 * (n as f64 * LN_2PI + z.norm_squared()) - half_log_det(chol)
}

#[derive(Debug, Clone)]
struct AxisFactor {
    chol: Cholesky<f64, Dyn>,
    /// `(K + σₙ² I)⁻¹ (v - μ)`
    weights: DVector<f64>,
    jitter: f64,
}

/// A GP velocity field conditioned on a training set, with both component
/// factorizations cached.
///
/// Supports leave-some-out prediction without refactorizing and cheap
/// insertion or removal of training points.
#[derive(Debug, Clone)]
pub struct ConditionedField {
    params: KernelParams,
    prior_mean: [f64; 2],
    points: Vec<[f64; 2]>,
    values: [Vec<f64>; 2],
    axes: Option<[AxisFactor; 2]>,
}

impl ConditionedField {
    pub fn build(
        points: Vec<[f64; 2]>,
        values: [Vec<f64>; 2],
        params: KernelParams,
        prior_mean: [f64; 2],
    ) -> Result<Self, GpError> {
        check_params(&params)?;
        if values[0].len() != points.len() || values[1].len() != points.len() {
            return Err(GpError::Domain("training values and positions differ in length".into()));
        }
        let mut field = ConditionedField {
            params,
            prior_mean,
            points,
            values,
            axes: None,
        };
        field.refactor()?;
        Ok(field)
    }

    /// Field conditioned on the pattern's training subset.
    pub fn from_pattern(pattern: &MotionPattern, frames: &[Frame]) -> Result<Self, GpError> {
        let (points, values) = training_data(pattern, frames)?;
        ConditionedField::build(points, values, pattern.params, pattern.prior_mean)
    }

    /// Unconditioned GP prior.
    pub fn prior(params: KernelParams, prior_mean: [f64; 2]) -> Result<Self, GpError> {
        ConditionedField::build(Vec::new(), [Vec::new(), Vec::new()], params, prior_mean)
    }

    fn refactor(&mut self) -> Result<(), GpError> {
        if self.points.is_empty() {
            self.axes = None;
            return Ok(());
        }
        let w = self.params.length_scales();
        let noise_free = self.params.sigma_n_sq == 0.0;
        let make = |axis: Axis| -> Result<AxisFactor, GpError> {
            let s2 = self.params.sigma_sq(axis);
            let k = self_kernel(&self.points, s2, w, self.params.sigma_n_sq);
            let Factor { chol, jitter } = factorize(&k, s2, noise_free)?;
            let r = self.residual(axis);
            let weights = chol.solve(&r);
            Ok(AxisFactor {
                chol,
                weights,
                jitter,
            })
        };
        self.axes = Some([make(Axis::X)?, make(Axis::Y)?]);
        Ok(())
    }

    fn residual(&self, axis: Axis) -> DVector<f64> {
        let mu = self.prior_mean[axis.index()];
        DVector::from_iterator(
            self.points.len(),
            self.values[axis.index()].iter().map(|v| v - mu),
        )
    }

    pub fn params(&self) -> &KernelParams {
        &self.params
    }

    pub fn prior_mean(&self) -> [f64; 2] {
        self.prior_mean
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn jitter(&self, axis: Axis) -> f64 {
        self.axes.as_ref().map_or(0.0, |a| a[axis.index()].jitter)
    }

    /// Posterior mean velocity at a single position.
    pub fn mean_at(&self, p: [f64; 2]) -> [f64; 2] {
        let mut out = self.prior_mean;
        if let Some(axes) = &self.axes {
            let w = self.params.length_scales();
            let (ix, iy) = (1.0 / (w[0] * w[0]), 1.0 / (w[1] * w[1]));
            for axis in Axis::BOTH {
                let a = axis.index();
                let s2 = self.params.sigma_sq(axis);
                let weights = &axes[a].weights;
                out[a] += self
                    .points
                    .iter()
                    .zip(weights.iter())
                    .map(|(t, wt)| kernel_raw(p, *t, s2, ix, iy) * wt)
                    .sum::<f64>();
            }
        }
        out
    }

    /// Posterior mean and marginal variance at many positions, without forming
    /// the full test covariance.
    pub fn marginals(&self, test: &[[f64; 2]]) -> ([Vec<f64>; 2], [Vec<f64>; 2]) {
        const CHUNK: usize = 256;
        let mut means = [Vec::with_capacity(test.len()), Vec::with_capacity(test.len())];
        let mut vars = [Vec::with_capacity(test.len()), Vec::with_capacity(test.len())];
        let w = self.params.length_scales();
        for chunk in test.chunks(CHUNK) {
            for axis in Axis::BOTH {
                let a = axis.index();
                let s2 = self.params.sigma_sq(axis);
                let mu = self.prior_mean[a];
                match &self.axes {
                    None => {
                        means[a].extend(std::iter::repeat_n(mu, chunk.len()));
                        vars[a].extend(std::iter::repeat_n(s2, chunk.len()));
                    }
                    Some(axes) => {
                        let kx = cross_kernel(&self.points, chunk, s2, w);
                        let m = kx.tr_mul(&axes[a].weights);
                        means[a].extend(m.iter().map(|v| v + mu));
                        let v = axes[a]
                            .chol
                            .l_dirty()
                            .solve_lower_triangular(&kx)
                            .expect("positive Cholesky diagonal");
                        for j in 0..chunk.len() {
                            let var = s2 - v.column(j).norm_squared();
                            vars[a].push(var.max(0.0));
                        }
                    }
                }
            }
        }
        (means, vars)
    }

    /// Latent posterior for one component at `test`, conditioning on every
    /// training point except the indices in `exclude`.
    pub fn posterior_axis(
        &self,
        axis: Axis,
        test: &[[f64; 2]],
        exclude: &[usize],
    ) -> Result<Posterior, GpError> {
        let a = axis.index();
        let s2 = self.params.sigma_sq(axis);
        let w = self.params.length_scales();
        let mu = self.prior_mean[a];
        let m = test.len();
        let k_pp = self_kernel(test, s2, w, 0.0);
        let prior = || Posterior {
            mean: DVector::from_element(m, mu),
            cov: k_pp.clone(),
        };
        let Some(axes) = &self.axes else {
            return Ok(prior());
        };
        let factor = &axes[a];
        let n = self.points.len();
        let mut excluded: Vec<usize> = exclude.to_vec();
        excluded.sort_unstable();
        excluded.dedup();
        if let Some(&bad) = excluded.iter().find(|&&i| i >= n) {
            return Err(GpError::Domain(format!(
                "excluded index {bad} out of range for {n} training points"
            )));
        }
        if excluded.len() == n {
            return Ok(prior());
        }
        let k_tp = cross_kernel(&self.points, test, s2, w);

        let (mean, mut cov) = if excluded.is_empty() {
            let mean = k_tp.tr_mul(&factor.weights).add_scalar(mu);
            let v = factor
                .chol
                .l_dirty()
                .solve_lower_triangular(&k_tp)
                .expect("positive Cholesky diagonal");
            (mean, &k_pp - v.tr_mul(&v))
        } else {
            // Conditioning on S = T \ B through the full factor:
            // A_SS⁻¹ x_S = z_S - Q_SB Q_BB⁻¹ z_B with z = A⁻¹ [x_S; 0].
            let mut rhs = DMatrix::zeros(n, m + 1);
            rhs.view_mut((0, 0), (n, m)).copy_from(&k_tp);
            let r = self.residual(axis);
            rhs.set_column(m, &r);
            for &b in &excluded {
                rhs.row_mut(b).fill(0.0);
            }
            let z = factor.chol.solve(&rhs);
            let nb = excluded.len();
            let mut e = DMatrix::zeros(n, nb);
            for (j, &b) in excluded.iter().enumerate() {
                e[(b, j)] = 1.0;
            }
            let y = factor.chol.solve(&e);
            let q_bb = DMatrix::from_fn(nb, nb, |i, j| y[(excluded[i], j)]);
            let z_b = DMatrix::from_fn(nb, m + 1, |i, j| z[(excluded[i], j)]);
            let q_factor = factorize(&q_bb, q_bb.diagonal().max(), false)?;
            let c = q_factor.chol.solve(&z_b);
            let wmat = z - y * c;
            let x = rhs.columns(0, m);
            let mean = x.tr_mul(&wmat.column(m)).add_scalar(mu);
            (mean, &k_pp - x.tr_mul(&wmat.columns(0, m)))
        };
        symmetrize(&mut cov);
        clamp_diagonal(&mut cov, s2)?;
        Ok(Posterior { mean, cov })
    }

    /// Latent posterior for both components.
    pub fn posterior(&self, test: &[[f64; 2]], exclude: &[usize]) -> Result<[Posterior; 2], GpError> {
        Ok([
            self.posterior_axis(Axis::X, test, exclude)?,
            self.posterior_axis(Axis::Y, test, exclude)?,
        ])
    }

    /// Log-density of observed (noisy) velocities at `test`, i.e. the latent
    /// posterior with `σₙ² I` added, summed over both components.
    pub fn predictive_log_density(
        &self,
        test: &[[f64; 2]],
        velocities: [&[f64]; 2],
        exclude: &[usize],
    ) -> Result<f64, GpError> {
        let mut total = 0.0;
        for axis in Axis::BOTH {
            let mut post = self.posterior_axis(axis, test, exclude)?;
            for i in 0..test.len() {
                post.cov[(i, i)] += self.params.sigma_n_sq;
            }
            let v = DVector::from_column_slice(velocities[axis.index()]);
            total += gaussian_log_density(&v, &post.mean, &post.cov)?;
        }
        Ok(total)
    }

    /// Log marginal likelihood of the training velocities for one component.
    pub fn log_marginal_axis(&self, axis: Axis) -> f64 {
        match &self.axes {
            None => 0.0,
            Some(axes) => {
                let f = &axes[axis.index()];
                let r = self.residual(axis);
                -0.5 * (r.dot(&f.weights) + self.points.len() as f64 * LN_2PI)
                    - half_log_det(&f.chol)
            }
        }
    }

    /// Sum of both components' log marginal likelihoods.
    pub fn log_marginal(&self) -> f64 {
        self.log_marginal_axis(Axis::X) + self.log_marginal_axis(Axis::Y)
    }

    /// Drops the training points at `indices`.
    pub fn remove_points(&mut self, indices: &[usize]) -> Result<(), GpError> {
        let mut idx = indices.to_vec();
        idx.sort_unstable_by(|a, b| b.cmp(a));
        idx.dedup();
        if idx.first().is_some_and(|&i| i >= self.points.len()) {
            return Err(GpError::Domain("training index out of range".into()));
        }
        for &i in &idx {
            self.points.remove(i);
            self.values[0].remove(i);
            self.values[1].remove(i);
        }
        if self.points.is_empty() {
            self.axes = None;
            return Ok(());
        }
        if let Some(axes) = &mut self.axes {
            for f in axes.iter_mut() {
                for &i in &idx {
                    f.chol = f.chol.remove_column(i);
                }
            }
        }
        self.refresh_weights();
        Ok(())
    }

    /// Appends training points.
    pub fn push_points(&mut self, points: &[[f64; 2]], values: [&[f64]; 2]) -> Result<(), GpError> {
        if values[0].len() != points.len() || values[1].len() != points.len() {
            return Err(GpError::Domain("training values and positions differ in length".into()));
        }
        if points.is_empty() {
            return Ok(());
        }
        let was_empty = self.axes.is_none();
        let w = self.params.length_scales();
        let mut ok = !was_empty;
        for (j, p) in points.iter().enumerate() {
            if ok {
                let axes = self.axes.as_mut().expect("checked above");
                for axis in Axis::BOTH {
                    let f = &mut axes[axis.index()];
                    let s2 = self.params.sigma_sq(axis);
                    let n = self.points.len();
                    let mut col = DVector::zeros(n + 1);
                    let (ix, iy) = (1.0 / (w[0] * w[0]), 1.0 / (w[1] * w[1]));
                    for (i, t) in self.points.iter().enumerate() {
                        col[i] = kernel_raw(*t, *p, s2, ix, iy);
                    }
                    col[n] = s2 + self.params.sigma_n_sq + f.jitter;
                    let next = f.chol.insert_column(n, col);
                    let d = next.l_dirty()[(n, n)];
                    if d.is_finite() && d > 0.0 {
                        f.chol = next;
                    } else {
                        ok = false;
                    }
                }
            }
            self.points.push(*p);
            self.values[0].push(values[0][j]);
            self.values[1].push(values[1][j]);
        }
        if ok {
            self.refresh_weights();
            Ok(())
        } else {
            self.refactor()
        }
    }

    fn refresh_weights(&mut self) {
        let r = [self.residual(Axis::X), self.residual(Axis::Y)];
        if let Some(axes) = &mut self.axes {
            for (f, r) in axes.iter_mut().zip(r.iter()) {
                f.weights = f.chol.solve(r);
            }
        }
    }
}

/// Stacked positions and velocities of a pattern's training points.
pub fn training_data(
    pattern: &MotionPattern,
    frames: &[Frame],
) -> Result<(Vec<[f64; 2]>, [Vec<f64>; 2]), GpError> {
    let mut points = Vec::with_capacity(pattern.training.len());
    let mut vx = Vec::with_capacity(pattern.training.len());
    let mut vy = Vec::with_capacity(pattern.training.len());
    for r in &pattern.training {
        let v = frames
            .get(r.frame as usize)
            .and_then(|f| f.vehicles().get(r.vehicle as usize))
            .ok_or_else(|| {
                GpError::Domain(format!(
                    "pattern {} references missing point {}/{}",
                    pattern.id, r.frame, r.vehicle
                ))
            })?;
        points.push(v.position());
        vx.push(v.vx);
        vy.push(v.vy);
    }
    Ok((points, [vx, vy]))
}

/// Posterior mean and marginal variance of a velocity field on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub nx: usize,
    pub ny: usize,
    /// Row-major grid points (y outer, x inner).
    pub points: Vec<[f64; 2]>,
    pub mean: Vec<[f64; 2]>,
    pub var: Vec<[f64; 2]>,
}

impl VectorField {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Evaluates a fitted field on the cell centres of an `nx` x `ny` grid over
/// the ROI.
pub fn field_on_grid(
    field: &ConditionedField,
    roi: &RegionOfInterest,
    nx: usize,
    ny: usize,
) -> Result<VectorField, GpError> {
    if nx == 0 || ny == 0 {
        return Err(GpError::Domain("grid dimensions must be positive".into()));
    }
    let points = roi.grid_centers(nx, ny);
    let (m, v) = field.marginals(&points);
    Ok(VectorField {
        nx,
        ny,
        mean: (0..points.len()).map(|i| [m[0][i], m[1][i]]).collect(),
        var: (0..points.len()).map(|i| [v[0][i], v[1][i]]).collect(),
        points,
    })
}

/// Posterior mean velocity field of a pattern conditioned on its member data.
pub fn mean_velocity_field(
    pattern: &MotionPattern,
    frames: &[Frame],
    roi: &RegionOfInterest,
    nx: usize,
    ny: usize,
) -> Result<VectorField, GpError> {
    if pattern.members.is_empty() || pattern.training.is_empty() {
        return Err(GpError::Domain(format!("pattern {} has no member data", pattern.id)));
    }
    let field = ConditionedField::from_pattern(pattern, frames)?;
    field_on_grid(&field, roi, nx, ny)
}

/// Scalar normal log-density.
pub fn normal_log_pdf(x: f64, mean: f64, var: f64) -> f64 {
    -0.5 * ((2.0 * PI * var).ln() + (x - mean).powi(2) / var)
}

//! Acceptance suite. Runs every criterion in order, prints one PASS/FAIL line
//! per criterion and exits nonzero if any fails.
//!
//! `cargo test --test acceptance` runs the default suite; add
//! `-- --include-ignored` for the full 1000-frame protocol run.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use dpgp_core::empirical::FrameDistributions;
use dpgp_core::gp::{gp_posterior, ConditionedField};
use dpgp_core::inference::sampler::member_points;
use dpgp_core::inference::{
    mh_length_scale_sweep, new_pattern_velocity_log_likelihood, prior_velocity_log_density, sample_alpha, AlphaGrid,
    Candidate, GibbsConfig, GibbsSampler, LengthScaleTarget,
};
use dpgp_core::io::load_model;
use dpgp_core::metrics::adjusted_rand_index;
use dpgp_core::model::{
    Axis, Frame, KernelParams, MixtureState, MotionPattern, PatternId, PriorConfig, RegionOfInterest, Vehicle,
};
use dpgp_core::rng::stream;
use dpgp_core::simulate::{simulate_trajectories, RolloutOptions};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::seq::SliceRandom;
use rand::Rng;
use statrs::distribution::{Continuous, Gamma, Normal};
use statrs::function::gamma::ln_gamma;

// Pinned tolerances.
const GP_REL_TOL: f64 = 1e-8;
const CRP_TOL: f64 = 1e-12;
const ALPHA_KS: f64 = 0.03;
const MH_KS: f64 = 0.05;
const MC_NATS: f64 = 0.05;
const ARI_MIN: f64 = 0.9;
const K_RANGE: (usize, usize) = (3, 6);
const PROPORTION_SUM_TOL: f64 = 1e-12;
const EULER_TOL: f64 = 1e-9;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

// ---------------------------------------------------------------------------
// Helpers

fn dpgp(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_dpgp")).args(args).output().map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!(
            "`dpgp {}` exited {:?}: {}",
            args.join(" "),
            out.status.code(),
            String::from_utf8_lossy(&out.stderr).lines().last().unwrap_or("")
        ))
    }
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Kolmogorov-Smirnov distance between `samples` and a CDF.
fn ks_distance(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max)
}

/// CDF of an unnormalized log density by trapezoidal quadrature on `nodes`,
/// interpolated linearly between nodes.
fn tabulated_cdf(nodes: Vec<f64>, log_density: impl Fn(f64) -> f64) -> impl Fn(f64) -> f64 {
    let logs: Vec<f64> = nodes.iter().map(|&x| log_density(x)).collect();
    let peak = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let f: Vec<f64> = logs.iter().map(|l| (l - peak).exp()).collect();
    let mut cum = vec![0.0];
    for i in 1..nodes.len() {
        let last = cum[i - 1];
        cum.push(last + 0.5 * (f[i] + f[i - 1]) * (nodes[i] - nodes[i - 1]));
    }
    let total = *cum.last().unwrap();
    move |x: f64| {
        if x <= nodes[0] {
            return 0.0;
        }
        let j = nodes.partition_point(|&n| n < x).min(nodes.len() - 1);
        // Integrate the linear density over the partial cell exactly.
        let h = nodes[j] - nodes[j - 1];
        let t = ((x - nodes[j - 1]) / h).min(1.0);
        let part = h * (f[j - 1] * t + 0.5 * (f[j] - f[j - 1]) * t * t);
        (cum[j - 1] + part) / total
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn se(p: [f64; 2], q: [f64; 2], s2: f64, w: [f64; 2]) -> f64 {
    let dx = (p[0] - q[0]) / w[0];
    let dy = (p[1] - q[1]) / w[1];
    s2 * (-0.5 * (dx * dx + dy * dy)).exp()
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    num / den.max(f64::MIN_POSITIVE)
}

// ---------------------------------------------------------------------------
// 1. GP posterior vs dense joint-Gaussian conditioning.

fn gp_oracle() -> Outcome {
    let mut rng = stream(2024, &[1]);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let n = rng.random_range(1..=50);
        let m = rng.random_range(1..=20);
        let pts = |k: usize, rng: &mut dpgp_core::rng::StreamRng| -> Vec<[f64; 2]> {
            (0..k).map(|_| [rng.random_range(0.0..10.0), rng.random_range(0.0..10.0)]).collect()
        };
        let train = pts(n, &mut rng);
        let test = pts(m, &mut rng);
        let s2 = rng.random_range(0.1..10.0);
        let w = [rng.random_range(0.5..5.0), rng.random_range(0.5..5.0)];
        let sn2 = rng.random_range(0.01..2.0);
        let mu = rng.random_range(-5.0..5.0);
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
        let params = KernelParams::new(s2, s2, w[0], w[1], sn2).unwrap();
        let got = gp_posterior(&train, &y, &test, &params, Axis::X, mu).unwrap();

        // Joint covariance of (noisy train, latent test); condition block-wise.
        let all: Vec<[f64; 2]> = train.iter().chain(&test).copied().collect();
        let joint = DMatrix::from_fn(n + m, n + m, |i, j| se(all[i], all[j], s2, w) + if i == j && i < n { sn2 } else { 0.0 });
        let k_tt = joint.view((0, 0), (n, n)).into_owned();
        let k_st = joint.view((n, 0), (m, n)).into_owned();
        let k_ss = joint.view((n, n), (m, m)).into_owned();
        let lu = k_tt.lu();
        let resid = DVector::from_iterator(n, y.iter().map(|v| v - mu));
        let mean = lu.solve(&resid).map(|a| &k_st * a).unwrap().add_scalar(mu);
        let cov = &k_ss - &k_st * lu.solve(&k_st.transpose()).unwrap();
        worst = worst
            .max(rel_err(got.mean.as_slice(), mean.as_slice()))
            .max(rel_err(got.cov.as_slice(), cov.as_slice()));
    }
    outcome(worst <= GP_REL_TOL, format!("worst relative error {worst:.2e} (tol {GP_REL_TOL:.0e})"))
}

// ---------------------------------------------------------------------------
// 2. CRP prior masses inside the assignment update.

fn single_vehicle_frames(n: usize, rng: &mut impl Rng) -> Vec<Frame> {
    (0..n)
        .map(|i| {
            let v = Vehicle::new(
                rng.random_range(0.0..10.0),
                rng.random_range(0.0..10.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            );
            Frame::new(i, i as f64, vec![v]).unwrap()
        })
        .collect()
}

fn crp_arithmetic() -> Outcome {
    let roi = RegionOfInterest::new(0.0, 10.0, 0.0, 10.0, 4, 4).unwrap();
    let mut rng = stream(2024, &[2]);
    let mut worst = 0.0f64;
    let mut closed_form = false;
    for trial in 0..1000 {
        // The worked example first, then random configurations.
        let (labels, alpha): (Vec<u32>, f64) = if trial == 0 {
            ([1, 1, 1, 1, 1, 2, 2, 2, 2, 2].to_vec(), 2.0)
        } else {
            let n = rng.random_range(2..=25);
            let k = rng.random_range(1..=n.min(6));
            let mut l: Vec<u32> = (0..n).map(|i| if i < k { i as u32 + 1 } else { rng.random_range(1..=k as u32) }).collect();
            l.shuffle(&mut rng);
            (l, 10f64.powf(rng.random_range(-2.0..2.0)))
        };
        let n = labels.len();
        let frames = single_vehicle_frames(n, &mut rng);
        let prior = PriorConfig {
            a: 10.0,
            b: 1.0,
            mu0_x: 0.0,
            mu0_y: 0.0,
            sigma0_sq_x: 1.0,
            sigma0_sq_y: 1.0,
            n_mc: 1,
            n_gibbs: 1,
            rng_seed: trial,
        };
        let config = GibbsConfig::new(prior);
        let dists = FrameDistributions::fit(&frames, &roi).unwrap();
        let mut patterns = BTreeMap::new();
        for &id in &labels {
            patterns.entry(PatternId(id)).or_insert_with(|| {
                let members = (0..n).filter(|&i| labels[i] == id).collect();
                let mut p = MotionPattern {
                    id: PatternId(id),
                    members,
                    params: config.kernel([2.0, 2.0]),
                    prior_mean: [0.0, 0.0],
                    training: Vec::new(),
                };
                p.training = member_points(&p.members, &frames);
                p
            });
        }
        let state = MixtureState {
            assignments: labels.iter().map(|&l| PatternId(l)).collect(),
            next_id: labels.iter().max().unwrap() + 1,
            patterns,
            alpha,
        };
        let sampler = GibbsSampler::from_state(&frames, &dists, config, state, 0).unwrap();
        let i = rng.random_range(0..n);
        let i = if trial == 0 { 0 } else { i };
        let scores = sampler.assignment_posterior(i).unwrap();
        let denom = n as f64 - 1.0 + alpha;
        let mut total = 0.0;
        for (j, c) in scores.candidates.iter().enumerate() {
            let expect = match c {
                Candidate::Existing(id) => {
                    labels.iter().enumerate().filter(|&(f, &l)| l == id.0 && f != i).count() as f64 / denom
                }
                Candidate::New => alpha / denom,
            };
            let got = scores.log_prior[j].exp();
            total += got;
            worst = worst.max((got - expect).abs());
        }
        worst = worst.max((total - 1.0).abs());
        if trial == 0 {
            // N=10, α=2, frame 0 leaves counts {4, 5}.
            let p: Vec<f64> = scores.log_prior.iter().map(|l| l.exp()).collect();
            closed_form = (p[0] - 4.0 / 11.0).abs() < CRP_TOL
                && (p[1] - 5.0 / 11.0).abs() < CRP_TOL
                && (p[2] - 2.0 / 11.0).abs() < CRP_TOL;
        }
    }
    outcome(
        worst < CRP_TOL && closed_form,
        format!("1000 configurations, worst error {worst:.2e}; {{4,5}}, N=10, α=2 -> 4/11, 5/11, 2/11: {closed_form}"),
    )
}

// ---------------------------------------------------------------------------
// 3. α sampler vs the normalized conditional.

fn alpha_fidelity() -> Outcome {
    let (k, n) = (5usize, 200usize);
    let grid = AlphaGrid::default();
    let mut rng = stream(2024, &[3]);
    let start = Instant::now();
    let mut draws: Vec<f64> = (0..10_000).map(|_| sample_alpha(k, n, &grid, &mut rng)).collect();
    let elapsed = start.elapsed();
    // Independent quadrature in ln α on a much finer grid.
    let log_density = |u: f64| {
        let a = u.exp();
        (k as f64 - 1.5) * u - 0.5 / a + ln_gamma(a) - ln_gamma(n as f64 + a) + u
    };
    let cdf = tabulated_cdf(linspace(1e-3f64.ln(), 1e3f64.ln(), 200_001), log_density);
    let ks = ks_distance(&mut draws, |a| cdf(a.ln()));
    outcome(
        ks < ALPHA_KS && elapsed < Duration::from_secs(10),
        format!("KS {ks:.4} (tol {ALPHA_KS}), {:.2}s (budget 10s)", elapsed.as_secs_f64()),
    )
}

// ---------------------------------------------------------------------------
// 4. Length-scale MH chain on a single observation.

fn mh_fidelity() -> Outcome {
    let (a, b, sn2, s2) = (10.0, 1.0, 1.0, 2.0);
    let points = [[3.0, 4.0]];
    let (vx, vy) = ([1.5], [-0.5]);
    let target = LengthScaleTarget {
        points: &points,
        values: [&vx, &vy],
        prior_mean: [0.0, 0.0],
        a,
        b,
    };
    let mut rng = stream(2024, &[4]);
    let params = KernelParams::new(s2, s2, 10.0, 10.0, sn2).unwrap();
    let mut field = target.field(params).unwrap();
    let start = Instant::now();
    let mut chain = Vec::with_capacity(10_000);
    for _ in 0..10_000 {
        field = mh_length_scale_sweep(&target, field, GibbsConfig::DEFAULT_MH_STEP, &mut rng).0;
        chain.push(field.params().w_x);
    }
    let elapsed = start.elapsed();
    // Posterior of w_x: gamma prior times the single-point evidence, with
    // w_y integrated out.
    let prior = Gamma::new(a, 1.0 / b).unwrap();
    let evidence = |_: f64| {
        Normal::new(0.0, (s2 + sn2).sqrt()).unwrap().ln_pdf(vx[0])
            + Normal::new(0.0, (s2 + sn2).sqrt()).unwrap().ln_pdf(vy[0])
    };
    let cdf = tabulated_cdf(linspace(1e-6, 60.0, 200_001), |w| prior.ln_pdf(w) + evidence(w));
    let ks = ks_distance(&mut chain, cdf);
    outcome(
        ks < MH_KS && elapsed < Duration::from_secs(60),
        format!("KS {ks:.4} (tol {MH_KS}), {:.2}s (budget 60s)", elapsed.as_secs_f64()),
    )
}

// ---------------------------------------------------------------------------
// 5. New-pattern Monte-Carlo integral vs Gauss quadrature.

/// Generalized Gauss-Laguerre rule for the weight `x^(a-1) e^-x / Γ(a)`
/// (Golub-Welsch), i.e. expectations under Γ(a, 1).
fn gauss_gamma_rule(a: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let alpha = a - 1.0;
    let jacobi = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            2.0 * i as f64 + alpha + 1.0
        } else if i.abs_diff(j) == 1 {
            let k = i.max(j) as f64;
            (k * (k + alpha)).sqrt()
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(jacobi);
    let weights = (0..n).map(|i| eig.eigenvectors[(0, i)].powi(2)).collect();
    (eig.eigenvalues.iter().copied().collect(), weights)
}

fn mc_fidelity() -> Outcome {
    let frame = Frame::new(0, 0.0, vec![Vehicle::new(1.0, 2.0, 0.8, -0.3), Vehicle::new(4.0, 2.5, 1.6, 0.4)]).unwrap();
    let prior = PriorConfig {
        a: 10.0,
        b: 1.0,
        mu0_x: 1.0,
        mu0_y: 0.0,
        sigma0_sq_x: 1.5,
        sigma0_sq_y: 0.5,
        n_mc: 10_000,
        n_gibbs: 1,
        rng_seed: 0,
    };
    let mut rng = stream(2024, &[5]);
    let start = Instant::now();
    let mc = new_pattern_velocity_log_likelihood(&frame, &prior, 1.0, &mut rng).unwrap();
    let elapsed = start.elapsed();

    let (x, w) = gauss_gamma_rule(prior.a, 48);
    let mut terms = Vec::new();
    for (i, xi) in x.iter().enumerate() {
        for (j, xj) in x.iter().enumerate() {
            let ld = prior_velocity_log_density(&frame, &prior, 1.0, [prior.b * xi, prior.b * xj]).unwrap();
            terms.push(w[i].ln() + w[j].ln() + ld);
        }
    }
    let peak = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let quad = peak + terms.iter().map(|t| (t - peak).exp()).sum::<f64>().ln();
    let gap = (mc - quad).abs();
    outcome(
        gap < MC_NATS && elapsed < Duration::from_secs(60),
        format!("MC {mc:.5} vs quadrature {quad:.5}: {gap:.4} nats (tol {MC_NATS}), {:.2}s", elapsed.as_secs_f64()),
    )
}

// ---------------------------------------------------------------------------
// 6 and 8. Planted-pattern recovery through the CLI, at two worker counts.

struct PlantedRun {
    dir: PathBuf,
    seconds: f64,
}

fn planted_run(root: &Path, workers: usize) -> Result<PlantedRun, String> {
    let dir = root.join(format!("planted-w{workers}"));
    let w = workers.to_string();
    let data = root.join("planted-data");
    if !data.exists() {
        dpgp(&["synth", "--seed", "3", "--n-frames", "150", "--out", s(&data)])?;
    }
    let start = Instant::now();
    dpgp(&[
        "--workers",
        &w,
        "fit",
        "--input",
        s(&data.join("trajectories.csv")),
        "--out",
        s(&dir),
        "--seed",
        "3",
        "--n-gibbs",
        "50",
        "--n-mc",
        "50",
    ])?;
    let seconds = start.elapsed().as_secs_f64();
    let model = dir.join("model.dpgp");
    let model_id = load_model(&model).map_err(|e| e.to_string())?.largest_pattern().to_string();
    dpgp(&["--workers", &w, "export-field", "--model", s(&model), "--pattern", &model_id, "--grid", "25x25", "--out", s(&dir.join("field.csv"))])?;
    dpgp(&["--workers", &w, "simulate", "--model", s(&model), "--generate", "--steps", "30", "--sampled", "--out", s(&dir.join("sim"))])?;
    Ok(PlantedRun { dir, seconds })
}

fn planted_recovery(run: &Result<PlantedRun, String>, root: &Path) -> Outcome {
    let run = match run {
        Ok(r) => r,
        Err(e) => return outcome(false, e.clone()),
    };
    let model = match load_model(&run.dir.join("model.dpgp")) {
        Ok(m) => m,
        Err(e) => return outcome(false, e.to_string()),
    };
    let labels: Vec<String> = fs::read_to_string(root.join("planted-data/labels.csv"))
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().to_string())
        .collect();
    if labels.len() != model.state.n() {
        return outcome(false, format!("{} labels for {} frames", labels.len(), model.state.n()));
    }
    let ari = adjusted_rand_index(&labels, &model.state.assignments);
    let k = model.state.k();
    let props: Vec<f64> = fs::read_to_string(run.dir.join("proportions.csv"))
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    let monotone = props.windows(2).all(|w| w[0] >= w[1]);
    let sum: f64 = props.iter().sum();
    let pass = ari >= ARI_MIN && (K_RANGE.0..=K_RANGE.1).contains(&k) && monotone && (sum - 1.0).abs() <= PROPORTION_SUM_TOL;
    outcome(
        pass,
        format!(
            "ARI {ari:.3} (min {ARI_MIN}), K {k} (range {}..={}), proportions monotone {monotone}, sum-1 {:.1e}, fit {:.1}s",
            K_RANGE.0,
            K_RANGE.1,
            sum - 1.0,
            run.seconds
        ),
    )
}

fn determinism(a: &Result<PlantedRun, String>, b: &Result<PlantedRun, String>) -> Outcome {
    let (a, b) = match (a, b) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return outcome(false, e.clone()),
    };
    let files = ["model.dpgp", "trace.csv", "proportions.csv", "field.csv", "sim/frame.csv", "sim/trajectories.csv"];
    let differ: Vec<&str> = files
        .iter()
        .copied()
        .filter(|f| fs::read(a.dir.join(f)).ok() != fs::read(b.dir.join(f)).ok())
        .collect();
    outcome(
        differ.is_empty(),
        if differ.is_empty() {
            format!("{} files byte-identical for 1 and 8 workers", files.len())
        } else {
            format!("differ: {}", differ.join(", "))
        },
    )
}

// ---------------------------------------------------------------------------
// 7. Euler roll-out on a constant field.

fn euler_exactness() -> Outcome {
    let roi = RegionOfInterest::new(-5.0, 50.0, -5.0, 5.0, 10, 2).unwrap();
    let points: Vec<[f64; 2]> = (0..8).map(|i| [i as f64 * 4.0, (i % 3) as f64 - 1.0]).collect();
    let values = [vec![10.0; 8], vec![0.0; 8]];
    let params = KernelParams::new(1e-6, 1e-6, 5.0, 5.0, 1.0).unwrap();
    let field = ConditionedField::build(points, values, params, [10.0, 0.0]).unwrap();
    let start = Frame::new(0, 0.0, vec![Vehicle::new(0.0, 0.0, 10.0, 0.0)]).unwrap();
    let traj = simulate_trajectories(&field, &roi, &start, 0.5, 4, RolloutOptions::default()).unwrap();
    let expect = [(0.0, 0.0), (5.0, 0.0), (10.0, 0.0), (15.0, 0.0), (20.0, 0.0)];
    let samples = &traj[0].samples;
    let err = samples
        .iter()
        .zip(expect)
        .map(|(p, (x, y))| (p.x - x).abs().max((p.y - y).abs()))
        .fold(0.0, f64::max);
    outcome(
        samples.len() == expect.len() && err <= EULER_TOL,
        format!("{} samples, max position error {err:.1e} (tol {EULER_TOL:.0e})", samples.len()),
    )
}

// ---------------------------------------------------------------------------
// 9. End-to-end protocol run at default settings.

fn protocol_run(root: &Path, n_frames: usize, budget: Duration) -> Outcome {
    let data = root.join(format!("protocol-{n_frames}"));
    let out = root.join(format!("protocol-{n_frames}-fit"));
    let start = Instant::now();
    let run = dpgp(&["synth", "--seed", "9", "--n-frames", &n_frames.to_string(), "--out", s(&data)]).and_then(|_| {
        dpgp(&["fit", "--input", s(&data.join("trajectories.csv")), "--out", s(&out), "--seed", "9"])
    });
    let elapsed = start.elapsed();
    if let Err(e) = run {
        return outcome(false, e);
    }
    let trace = fs::read_to_string(out.join("trace.csv")).unwrap();
    let rows: Vec<&str> = trace.lines().skip(1).collect();
    let balanced = rows.iter().all(|r| {
        let counts = r.rsplit(',').next().unwrap();
        counts.split(';').map(|c| c.split(':').nth(1).unwrap().parse::<usize>().unwrap()).sum::<usize>() == n_frames
    });
    outcome(
        rows.len() == 100 && balanced && elapsed < budget,
        format!(
            "{n_frames} frames, {} iterations, every Σn_k = N: {balanced}, {:.1}s (budget {}s)",
            rows.len(),
            elapsed.as_secs_f64(),
            budget.as_secs()
        ),
    )
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let full = args.iter().any(|a| a == "--include-ignored" || a == "--ignored");
    // Nothing to list when the harness asks for test names.
    if args.iter().any(|a| a == "--list") {
        return;
    }
    let root = tempfile::tempdir().unwrap();
    let root = root.path();

    let mut results: Vec<(&str, Outcome)> = Vec::new();
    let mut report = |name: &'static str, o: Outcome| {
        eprintln!("criterion {name}: {} - {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push((name, o));
    };
    report("1 (GP oracle)", gp_oracle());
    report("2 (CRP arithmetic)", crp_arithmetic());
    report("3 (alpha sampler)", alpha_fidelity());
    report("4 (length-scale MH)", mh_fidelity());
    report("5 (Monte-Carlo integral)", mc_fidelity());
    let wide = planted_run(root, 8);
    report("6 (planted recovery)", planted_recovery(&wide, root));
    report("7 (Euler exactness)", euler_exactness());
    let narrow = planted_run(root, 1);
    report("8 (determinism)", determinism(&narrow, &wide));
    report("9 (200-frame smoke)", protocol_run(root, 200, Duration::from_secs(600)));
    if full {
        report("9 (1000-frame protocol)", protocol_run(root, 1000, Duration::from_secs(7200)));
    } else {
        eprintln!("criterion 9 (1000-frame protocol): skipped, run with `-- --include-ignored`");
    }

    let failed = results.iter().filter(|r| !r.1.pass).count();
    eprintln!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

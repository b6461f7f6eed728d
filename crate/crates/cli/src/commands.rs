use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use dpgp_core::fitted::FittedModel;
use dpgp_core::inference::{Candidate, GibbsConfig, GibbsTrace};
use dpgp_core::io::{
    downsample_frames, export_field, export_trajectories, extract_frames, load_model, read_trajectories, save_model,
};
use dpgp_core::model::{Frame, PatternId, PriorConfig, Vehicle};
use dpgp_core::rng::{stream, tag};
use dpgp_core::simulate::{classify_frame, generate_frame, simulate_trajectories, Classification, RolloutOptions};
use dpgp_core::synth::{generate, write_labels, write_records};

use crate::config::{FitConfig, Manifest, RoiConfig, SynthConfig};
use crate::error::CliError;

fn out_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Ingest(format!("{}: {e}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|e| out_err(path, e))
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| out_err(dir, e))
}

pub fn write_trace<W: Write>(trace: &GibbsTrace, mut w: W) -> std::io::Result<()> {
    writeln!(w, "iteration,k,alpha,log_likelihood,counts")?;
    for r in trace {
        let counts: Vec<String> = r.counts.iter().map(|(id, n)| format!("{id}:{n}")).collect();
        writeln!(w, "{},{},{},{},{}", r.iteration, r.k, r.alpha, r.log_likelihood, counts.join(";"))?;
    }
    w.flush()
}

pub fn write_proportions<W: Write>(model: &FittedModel, mut w: W) -> std::io::Result<()> {
    writeln!(w, "pattern,count,proportion")?;
    for (id, n, p) in model.state.proportions() {
        writeln!(w, "{id},{n},{p}")?;
    }
    w.flush()
}

pub fn fit(cfg: &mut FitConfig) -> Result<FittedModel, CliError> {
    cfg.validate()?;
    let input = cfg.input.clone().expect("validated");
    let report = read_trajectories(&input, &cfg.ingest)?;
    if report.rejected > 0 {
        eprintln!("skipped {} of {} rows", report.rejected, report.rows);
    }
    let roi_cfg = match cfg.roi {
        Some(r) => r,
        None => RoiConfig::bounding(&report.records)
            .ok_or_else(|| CliError::Ingest(format!("{}: no trajectory records", input.display())))?,
    };
    cfg.roi = Some(roi_cfg);
    let roi = roi_cfg.to_roi()?;
    let (frames, stats) = extract_frames(&report.records, &roi, cfg.dt)?;
    eprintln!(
        "{} frames from {} records (duplicates {}, downsampled {}, outside ROI {}, single sample {})",
        frames.len(),
        stats.records,
        stats.duplicates,
        stats.downsampled,
        stats.outside_roi,
        stats.single_sample
    );
    if frames.is_empty() {
        return Err(CliError::Ingest(format!("{}: no frames could be built", input.display())));
    }
    let frames = downsample_frames(frames, cfg.max_frames);
    let n_frames = frames.len();

    let prior = PriorConfig::from_frames(&frames, cfg.a, cfg.b, cfg.n_mc, cfg.n_gibbs, cfg.seed)?;
    let gibbs = GibbsConfig {
        sigma_n_sq: cfg.sigma_n_sq,
        mh_step: cfg.mh_step,
        assignment: cfg.assignment,
        max_training_points: cfg.max_training_points,
        ..GibbsConfig::new(prior)
    };
    gibbs.validate()?;

    create_dir(&cfg.out)?;
    let total = cfg.n_gibbs;
    let result = FittedModel::fit(frames, roi, gibbs, |r| {
        eprintln!(
            "iteration {}/{total}: K={} alpha={:.4} log-lik={:.3} ({:.2}s)",
            r.iteration, r.k, r.alpha, r.log_likelihood, r.seconds
        );
    });
    let model = match result {
        Ok(m) => m,
        Err(failure) => {
            let path = cfg.out.join("trace.csv");
            write_trace(&failure.trace, create(&path)?).map_err(|e| out_err(&path, e))?;
            return Err(failure.into());
        }
    };

    let out = &cfg.out;
    save_model(&model, &out.join("model.dpgp")).map_err(|e| CliError::Ingest(e.to_string()))?;
    let path = out.join("trace.csv");
    write_trace(&model.trace, create(&path)?).map_err(|e| out_err(&path, e))?;
    let path = out.join("proportions.csv");
    write_proportions(&model, create(&path)?).map_err(|e| out_err(&path, e))?;
    let manifest = Manifest {
        dpgp_version: env!("CARGO_PKG_VERSION").to_string(),
        frames: n_frames,
        records: report.records.len(),
        rejected_rows: report.rejected,
        config: cfg.clone(),
    };
    let path = out.join("manifest.toml");
    let text = toml::to_string(&manifest).map_err(|e| CliError::Config(e.to_string()))?;
    fs::write(&path, text).map_err(|e| out_err(&path, e))?;
    eprintln!("K = {}, alpha = {:.4}; outputs in {}", model.state.k(), model.state.alpha, out.display());
    Ok(model)
}

pub fn load(path: &Path) -> Result<FittedModel, CliError> {
    Ok(load_model(path)?)
}

fn lookup(model: &FittedModel, id: u32) -> Result<PatternId, CliError> {
    let id = PatternId(id);
    if model.state.patterns.contains_key(&id) {
        return Ok(id);
    }
    let valid: Vec<String> = model.pattern_ids().iter().map(|p| p.to_string()).collect();
    Err(CliError::Config(format!("unknown pattern {id}; valid ids: {}", valid.join(", "))))
}

pub fn export_field_cmd(model: &FittedModel, pattern: u32, nx: usize, ny: usize, out: &Path) -> Result<(), CliError> {
    let id = lookup(model, pattern)?;
    if nx == 0 || ny == 0 {
        return Err(CliError::Config("grid dimensions must be >= 1".into()));
    }
    let field = model.mean_field(id, nx, ny)?;
    export_field(&field, out)?;
    Ok(())
}

/// Reads a single test frame from a CSV with columns `x,y,vx,vy`.
pub fn read_test_frame(path: &Path) -> Result<Frame, CliError> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| out_err(path, e))?;
    let headers = rdr.headers().map_err(|e| out_err(path, e))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| CliError::Ingest(format!("{}: missing column `{name}`", path.display())))
    };
    let cols = [col("x")?, col("y")?, col("vx")?, col("vy")?];
    let mut vehicles = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row.map_err(|e| out_err(path, e))?;
        let mut v = [0.0; 4];
        for (slot, &c) in v.iter_mut().zip(&cols) {
            *slot = row
                .get(c)
                .and_then(|s| s.trim().parse::<f64>().ok())
                .filter(|x| x.is_finite())
                .ok_or_else(|| CliError::Ingest(format!("{}: row {}: bad number", path.display(), i + 2)))?;
        }
        vehicles.push(Vehicle::new(v[0], v[1], v[2], v[3]));
    }
    Frame::new(0, 0.0, vehicles).map_err(|e| CliError::Ingest(format!("{}: {e}", path.display())))
}

pub fn write_scores<W: Write>(c: &Classification, mut w: W) -> std::io::Result<()> {
    writeln!(w, "candidate,log_prior,log_velocity,log_base,score,selected")?;
    for (j, cand) in c.scores.candidates.iter().enumerate() {
        let name = match cand {
            Candidate::Existing(id) => id.to_string(),
            Candidate::New => "new".to_string(),
        };
        writeln!(
            w,
            "{name},{},{},{},{},{}",
            c.scores.log_prior[j],
            c.scores.log_velocity[j],
            c.scores.log_base,
            c.scores.score(j),
            *cand == c.choice
        )?;
    }
    w.flush()
}

pub struct SimulateArgs {
    pub test_frame: Option<PathBuf>,
    pub pattern: Option<u32>,
    pub dt: f64,
    pub steps: usize,
    pub options: RolloutOptions,
    pub out: PathBuf,
}

pub fn simulate(model: &FittedModel, args: &SimulateArgs) -> Result<(), CliError> {
    create_dir(&args.out)?;
    let (frame, id) = match &args.test_frame {
        Some(path) => {
            let frame = read_test_frame(path)?;
            let c = classify_frame(&frame, model)?;
            let path = args.out.join("scores.csv");
            write_scores(&c, create(&path)?).map_err(|e| out_err(&path, e))?;
            let id = match c.choice {
                Candidate::Existing(id) => id,
                Candidate::New => {
                    let id = c.best_existing().expect("a fitted model has at least one pattern");
                    eprintln!("frame favours a new pattern; rolling out with best existing pattern {id}");
                    id
                }
            };
            eprintln!("classified as pattern {id}");
            (frame, id)
        }
        None => {
            let id = match args.pattern {
                Some(p) => lookup(model, p)?,
                None => model.largest_pattern(),
            };
            let field = model.field(id).expect("field cached for every pattern");
            let mut rng = stream(args.options.seed, &[tag::GENERATE]);
            let frame = generate_frame(field, &model.dists, 0, 0.0, &mut rng)?;
            let path = args.out.join("frame.csv");
            let mut w = create(&path)?;
            let write = |w: &mut BufWriter<File>| -> std::io::Result<()> {
                writeln!(w, "x,y,vx,vy")?;
                for v in frame.vehicles() {
                    writeln!(w, "{},{},{},{}", v.x, v.y, v.vx, v.vy)?;
                }
                w.flush()
            };
            write(&mut w).map_err(|e| out_err(&path, e))?;
            eprintln!("generated {} vehicles from pattern {id}", frame.len());
            (frame, id)
        }
    };
    let field = model.field(id).expect("field cached for every pattern");
    let traj = simulate_trajectories(field, &model.roi, &frame, args.dt, args.steps, args.options)?;
    export_trajectories(&traj, &args.out.join("trajectories.csv"))?;
    Ok(())
}

pub fn inspect<W: Write>(model: &FittedModel, mut w: W) -> std::io::Result<()> {
    let s = &model.state;
    let p = &model.config.prior;
    writeln!(w, "frames: {}", s.n())?;
    writeln!(w, "patterns: {}", s.k())?;
    writeln!(w, "alpha: {}", s.alpha)?;
    writeln!(w, "{:>8} {:>8} {:>10} {:>10} {:>10}", "pattern", "n_k", "share", "w_x", "w_y")?;
    for (id, n, share) in s.proportions() {
        let [wx, wy] = s.patterns[&id].params.length_scales();
        writeln!(w, "{id:>8} {n:>8} {share:>10.4} {wx:>10.4} {wy:>10.4}")?;
    }
    writeln!(w, "prior: a={} b={} mu0=({}, {}) sigma0_sq=({}, {})", p.a, p.b, p.mu0_x, p.mu0_y, p.sigma0_sq_x, p.sigma0_sq_y)?;
    writeln!(
        w,
        "sampler: n_gibbs={} n_mc={} seed={} sigma_n_sq={} assignment={:?}",
        p.n_gibbs, p.n_mc, p.rng_seed, model.config.sigma_n_sq, model.config.assignment
    )?;
    match (model.trace.first(), model.trace.last()) {
        (Some(first), Some(last)) => writeln!(
            w,
            "trace: {} iterations; K {} -> {}; log-lik {:.3} -> {:.3}",
            model.trace.len(),
            first.k,
            last.k,
            first.log_likelihood,
            last.log_likelihood
        )?,
        _ => writeln!(w, "trace: empty")?,
    }
    w.flush()
}

pub fn synth(cfg: &SynthConfig, out: &Path) -> Result<(), CliError> {
    let data = generate(&cfg.spec).map_err(|e| CliError::Config(e.to_string()))?;
    create_dir(out)?;
    let path = out.join("trajectories.csv");
    write_records(&data.records, create(&path)?).map_err(|e| out_err(&path, e))?;
    let path = out.join("labels.csv");
    write_labels(&data.labels, create(&path)?).map_err(|e| out_err(&path, e))?;
    eprintln!("{} records, {} frames written to {}", data.records.len(), data.labels.len(), out.display());
    Ok(())
}

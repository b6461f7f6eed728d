//! Shared domain types: region of interest, frames, kernel parameters, motion
//! patterns and the full mixture state.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// Velocity component index (the η ∈ {x, y} of the model).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
}

impl Axis {
    pub const BOTH: [Axis; 2] = [Axis::X, Axis::Y];

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
        }
    }
}

/// Axis-aligned rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Rect {
    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> [f64; 2] {
        [
            0.5 * (self.x_min + self.x_max),
            0.5 * (self.y_min + self.y_max),
        ]
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x_min && x <= self.x_max && y >= self.y_min && y <= self.y_max
    }
}

/// The fixed spatial rectangle under study together with the bin grid used by
/// the empirical position distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RoiFields", into = "RoiFields")]
pub struct RegionOfInterest {
    rect: Rect,
    n_bins_x: usize,
    n_bins_y: usize,
}

#[derive(Serialize, Deserialize)]
struct RoiFields {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
    n_bins_x: usize,
    n_bins_y: usize,
}

impl TryFrom<RoiFields> for RegionOfInterest {
    type Error = ModelError;

    fn try_from(f: RoiFields) -> Result<Self, Self::Error> {
        RegionOfInterest::new(f.x_min, f.x_max, f.y_min, f.y_max, f.n_bins_x, f.n_bins_y)
    }
}

impl From<RegionOfInterest> for RoiFields {
    fn from(r: RegionOfInterest) -> Self {
        RoiFields {
            x_min: r.rect.x_min,
            x_max: r.rect.x_max,
            y_min: r.rect.y_min,
            y_max: r.rect.y_max,
            n_bins_x: r.n_bins_x,
            n_bins_y: r.n_bins_y,
        }
    }
}

impl RegionOfInterest {
    pub const DEFAULT_BINS: usize = 20;

    pub fn new(
        x_min: f64,
        x_max: f64,
        y_min: f64,
        y_max: f64,
        n_bins_x: usize,
        n_bins_y: usize,
    ) -> Result<Self, ModelError> {
        if ![x_min, x_max, y_min, y_max].iter().all(|v| v.is_finite()) {
            return Err(ModelError::Roi("bounds must be finite".into()));
        }
        if x_min >= x_max || y_min >= y_max {
            return Err(ModelError::Roi(format!(
                "need x_min < x_max and y_min < y_max, got x: [{x_min}, {x_max}], y: [{y_min}, {y_max}]"
            )));
        }
        if n_bins_x == 0 || n_bins_y == 0 {
            return Err(ModelError::Roi("bin counts must be positive".into()));
        }
        Ok(RegionOfInterest {
            rect: Rect {
                x_min,
                x_max,
                y_min,
                y_max,
            },
            n_bins_x,
            n_bins_y,
        })
    }

    pub fn rect(&self) -> Rect {
        self.rect
    }

    pub fn x_min(&self) -> f64 {
        self.rect.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.rect.x_max
    }

    pub fn y_min(&self) -> f64 {
        self.rect.y_min
    }

    pub fn y_max(&self) -> f64 {
        self.rect.y_max
    }

    pub fn n_bins_x(&self) -> usize {
        self.n_bins_x
    }

    pub fn n_bins_y(&self) -> usize {
        self.n_bins_y
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins_x * self.n_bins_y
    }

    pub fn area(&self) -> f64 {
        self.rect.area()
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        self.rect.contains(x, y)
    }

    /// Bin holding `(x, y)`, row-major (`iy * n_bins_x + ix`).
    ///
    /// Bins are half-open on the low side: a point on an interior boundary
    /// belongs to the lower-indexed bin, the ROI's own lower edges belong to
    /// bin 0.
    pub fn bin_index(&self, x: f64, y: f64) -> Option<usize> {
        if !self.contains(x, y) {
            return None;
        }
        let ix = axis_bin(x, self.rect.x_min, self.rect.width(), self.n_bins_x);
        let iy = axis_bin(y, self.rect.y_min, self.rect.height(), self.n_bins_y);
        Some(iy * self.n_bins_x + ix)
    }

    pub fn bin_rect(&self, index: usize) -> Rect {
        let ix = index % self.n_bins_x;
        let iy = index / self.n_bins_x;
        let bw = self.rect.width() / self.n_bins_x as f64;
        let bh = self.rect.height() / self.n_bins_y as f64;
        let x_min = self.rect.x_min + ix as f64 * bw;
        let y_min = self.rect.y_min + iy as f64 * bh;
        Rect {
            x_min,
            x_max: if ix + 1 == self.n_bins_x {
                self.rect.x_max
            } else {
                x_min + bw
            },
            y_min,
            y_max: if iy + 1 == self.n_bins_y {
                self.rect.y_max
            } else {
                y_min + bh
            },
        }
    }

    /// Centres of a regular `nx` x `ny` cell partition, row-major (y outer).
    pub fn grid_centers(&self, nx: usize, ny: usize) -> Vec<[f64; 2]> {
        let dx = self.rect.width() / nx as f64;
        let dy = self.rect.height() / ny as f64;
        let mut points = Vec::with_capacity(nx * ny);
        for iy in 0..ny {
            for ix in 0..nx {
                points.push([
                    self.rect.x_min + (ix as f64 + 0.5) * dx,
                    self.rect.y_min + (iy as f64 + 0.5) * dy,
                ]);
            }
        }
        points
    }
}

fn axis_bin(v: f64, lo: f64, extent: f64, n: usize) -> usize {
    let scaled = (v - lo) / extent * n as f64;
    let idx = scaled.ceil() as isize - 1;
    idx.clamp(0, n as isize - 1) as usize
}

/// One vehicle observation: position and velocity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vehicle {
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
}

impl Vehicle {
    pub fn new(x: f64, y: f64, vx: f64, vy: f64) -> Self {
        Vehicle { x, y, vx, vy }
    }

    pub fn position(&self) -> [f64; 2] {
        [self.x, self.y]
    }

    pub fn velocity(&self, axis: Axis) -> f64 {
        match axis {
            Axis::X => self.vx,
            Axis::Y => self.vy,
        }
    }
}

/// A single time slice: every vehicle observed in the ROI at one instant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub frame_id: usize,
    pub timestamp: f64,
    vehicles: Vec<Vehicle>,
}

/// Column view `(V_x, V_y, X, Y)` of a frame.
#[derive(Debug, Clone, PartialEq)]
pub struct StackedFrame {
    pub vx: Vec<f64>,
    pub vy: Vec<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl Frame {
    pub fn new(frame_id: usize, timestamp: f64, vehicles: Vec<Vehicle>) -> Result<Self, ModelError> {
        if vehicles.is_empty() {
            return Err(ModelError::Frame(format!("frame {frame_id} has no vehicles")));
        }
        if let Some(v) = vehicles
            .iter()
            .find(|v| ![v.x, v.y, v.vx, v.vy].iter().all(|c| c.is_finite()))
        {
            return Err(ModelError::Frame(format!(
                "frame {frame_id} has a non-finite vehicle {v:?}"
            )));
        }
        Ok(Frame {
            frame_id,
            timestamp,
            vehicles,
        })
    }

    /// Like [`Frame::new`] but also checks every vehicle lies inside `roi`.
    pub fn new_in(
        frame_id: usize,
        timestamp: f64,
        vehicles: Vec<Vehicle>,
        roi: &RegionOfInterest,
    ) -> Result<Self, ModelError> {
        if let Some(v) = vehicles.iter().find(|v| !roi.contains(v.x, v.y)) {
            return Err(ModelError::OutsideRoi { x: v.x, y: v.y });
        }
        Frame::new(frame_id, timestamp, vehicles)
    }

    pub fn vehicles(&self) -> &[Vehicle] {
        &self.vehicles
    }

    pub fn len(&self) -> usize {
        self.vehicles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vehicles.is_empty()
    }

    pub fn positions(&self) -> Vec<[f64; 2]> {
        self.vehicles.iter().map(Vehicle::position).collect()
    }

    pub fn velocities(&self, axis: Axis) -> Vec<f64> {
        self.vehicles.iter().map(|v| v.velocity(axis)).collect()
    }

    pub fn stacked(&self) -> StackedFrame {
        StackedFrame {
            vx: self.velocities(Axis::X),
            vy: self.velocities(Axis::Y),
            x: self.vehicles.iter().map(|v| v.x).collect(),
            y: self.vehicles.iter().map(|v| v.y).collect(),
        }
    }

    pub fn from_stacked(
        frame_id: usize,
        timestamp: f64,
        s: &StackedFrame,
    ) -> Result<Self, ModelError> {
        let l = s.x.len();
        if s.y.len() != l || s.vx.len() != l || s.vy.len() != l {
            return Err(ModelError::Frame("stacked columns differ in length".into()));
        }
        let vehicles = (0..l)
            .map(|j| Vehicle::new(s.x[j], s.y[j], s.vx[j], s.vy[j]))
            .collect();
        Frame::new(frame_id, timestamp, vehicles)
    }

    pub fn inside(&self, roi: &RegionOfInterest) -> bool {
        self.vehicles.iter().all(|v| roi.contains(v.x, v.y))
    }
}

/// Squared-exponential kernel hyperparameters of one motion pattern.
///
/// The length scales act on the position coordinates and are shared by both
/// velocity components; each velocity component has its own signal variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    pub sigma_sq_x: f64,
    pub sigma_sq_y: f64,
    pub w_x: f64,
    pub w_y: f64,
    pub sigma_n_sq: f64,
}

impl KernelParams {
    pub fn new(
        sigma_sq_x: f64,
        sigma_sq_y: f64,
        w_x: f64,
        w_y: f64,
        sigma_n_sq: f64,
    ) -> Result<Self, ModelError> {
        let p = KernelParams {
            sigma_sq_x,
            sigma_sq_y,
            w_x,
            w_y,
            sigma_n_sq,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        for (name, v) in [
            ("sigma_sq_x", self.sigma_sq_x),
            ("sigma_sq_y", self.sigma_sq_y),
            ("w_x", self.w_x),
            ("w_y", self.w_y),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ModelError::Kernel(format!("{name} = {v} must be > 0")));
            }
        }
        // A zero noise variance is allowed; jitter takes over.
        if !(self.sigma_n_sq >= 0.0 && self.sigma_n_sq.is_finite()) {
            return Err(ModelError::Kernel(format!(
                "sigma_n_sq = {} must be >= 0",
                self.sigma_n_sq
            )));
        }
        Ok(())
    }

    pub fn sigma_sq(&self, axis: Axis) -> f64 {
        match axis {
            Axis::X => self.sigma_sq_x,
            Axis::Y => self.sigma_sq_y,
        }
    }

    pub fn length_scales(&self) -> [f64; 2] {
        [self.w_x, self.w_y]
    }

    pub fn with_length_scales(mut self, w: [f64; 2]) -> Self {
        self.w_x = w[0];
        self.w_y = w[1];
        self
    }
}

/// Stable motion-pattern identifier. Ids are never reused within a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PatternId(pub u32);

impl fmt::Display for PatternId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

/// Reference to one vehicle observation inside the dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PointRef {
    pub frame: u32,
    pub vehicle: u32,
}

/// One mixture component: a GP velocity field and the frames it explains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotionPattern {
    pub id: PatternId,
    pub members: BTreeSet<usize>,
    pub params: KernelParams,
    /// Constant prior mean velocity `[x, y]`.
    pub prior_mean: [f64; 2],
    /// Observations the GP is conditioned on: all member points, or a uniform
    /// subsample of them once the pattern exceeds the training cap.
    pub training: Vec<PointRef>,
}

impl MotionPattern {
    pub fn count(&self) -> usize {
        self.members.len()
    }
}

/// Full sampler state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureState {
    pub assignments: Vec<PatternId>,
    pub patterns: BTreeMap<PatternId, MotionPattern>,
    pub alpha: f64,
    pub next_id: u32,
}

impl MixtureState {
    pub fn k(&self) -> usize {
        self.patterns.len()
    }

    pub fn n(&self) -> usize {
        self.assignments.len()
    }

    pub fn counts(&self) -> BTreeMap<PatternId, usize> {
        self.patterns.iter().map(|(id, p)| (*id, p.count())).collect()
    }

    /// Mixture proportions `n_k / N` sorted in decreasing order (ties by id).
    pub fn proportions(&self) -> Vec<(PatternId, usize, f64)> {
        let n = self.n() as f64;
        let mut rows: Vec<_> = self
            .patterns
            .values()
            .map(|p| (p.id, p.count(), p.count() as f64 / n))
            .collect();
        rows.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        rows
    }

    pub fn pattern_of(&self, frame: usize) -> Option<&MotionPattern> {
        self.assignments
            .get(frame)
            .and_then(|id| self.patterns.get(id))
    }
}

/// Hyperparameters of the DP-GP prior and run length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorConfig {
    /// Gamma shape of the length-scale prior.
    pub a: f64,
    /// Gamma scale of the length-scale prior (position units).
    pub b: f64,
    pub mu0_x: f64,
    pub mu0_y: f64,
    pub sigma0_sq_x: f64,
    pub sigma0_sq_y: f64,
    pub n_mc: usize,
    pub n_gibbs: usize,
    pub rng_seed: u64,
}

impl PriorConfig {
    /// Smallest velocity variance used when the data are exactly constant.
    pub const MIN_VARIANCE: f64 = 1e-6;

    /// Prior whose new-pattern mean and variance are the per-axis mean and
    /// (population) variance of every observed velocity.
    pub fn from_frames(
        frames: &[Frame],
        a: f64,
        b: f64,
        n_mc: usize,
        n_gibbs: usize,
        rng_seed: u64,
    ) -> Result<Self, ModelError> {
        let (mean, var) = velocity_moments(frames)?;
        let p = PriorConfig {
            a,
            b,
            mu0_x: mean[0],
            mu0_y: mean[1],
            sigma0_sq_x: var[0].max(Self::MIN_VARIANCE),
            sigma0_sq_y: var[1].max(Self::MIN_VARIANCE),
            n_mc,
            n_gibbs,
            rng_seed,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.a > 0.0 && self.a.is_finite()) || !(self.b > 0.0 && self.b.is_finite()) {
            return Err(ModelError::Prior(format!(
                "gamma prior needs a > 0 and b > 0, got a = {}, b = {}",
                self.a, self.b
            )));
        }
        if self.n_mc == 0 {
            return Err(ModelError::Prior("n_mc must be >= 1".into()));
        }
        if !(self.sigma0_sq_x > 0.0 && self.sigma0_sq_y > 0.0) {
            return Err(ModelError::Prior("new-pattern variances must be > 0".into()));
        }
        if !(self.mu0_x.is_finite() && self.mu0_y.is_finite()) {
            return Err(ModelError::Prior("new-pattern means must be finite".into()));
        }
        Ok(())
    }

    pub fn mu0(&self) -> [f64; 2] {
        [self.mu0_x, self.mu0_y]
    }

    pub fn sigma0_sq(&self) -> [f64; 2] {
        [self.sigma0_sq_x, self.sigma0_sq_y]
    }
}

/// Per-axis mean and population variance of every velocity in `frames`.
pub fn velocity_moments(frames: &[Frame]) -> Result<([f64; 2], [f64; 2]), ModelError> {
    let n: usize = frames.iter().map(Frame::len).sum();
    if n == 0 {
        return Err(ModelError::EmptyDataset);
    }
    let mut mean = [0.0; 2];
    for v in frames.iter().flat_map(|f| f.vehicles()) {
        mean[0] += v.vx;
        mean[1] += v.vy;
    }
    mean[0] /= n as f64;
    mean[1] /= n as f64;
    let mut var = [0.0; 2];
    for v in frames.iter().flat_map(|f| f.vehicles()) {
        var[0] += (v.vx - mean[0]).powi(2);
        var[1] += (v.vy - mean[1]).powi(2);
    }
    var[0] /= n as f64;
    var[1] /= n as f64;
    Ok((mean, var))
}

/// A violated [`MixtureState`] invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum StateViolation {
    CountMismatch { total: usize, n: usize },
    DanglingAssignment { frame: usize, pattern: PatternId },
    MembershipMismatch { frame: usize, pattern: PatternId },
    EmptyPattern(PatternId),
    KeyMismatch { key: PatternId, id: PatternId },
    TooManyPatterns { k: usize, n: usize },
    ReusableId { id: PatternId, next_id: u32 },
    TrainingOutsideMembers { pattern: PatternId, point: PointRef },
    NonPositiveAlpha(f64),
}

impl fmt::Display for StateViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateViolation::CountMismatch { total, n } => {
                write!(f, "count mismatch: sum of n_k is {total}, N is {n}")
            }
            StateViolation::DanglingAssignment { frame, pattern } => {
                write!(f, "dangling assignment: frame {frame} -> missing pattern {pattern}")
            }
            StateViolation::MembershipMismatch { frame, pattern } => {
                write!(f, "membership mismatch: frame {frame} and pattern {pattern} disagree")
            }
            StateViolation::EmptyPattern(id) => write!(f, "pattern {id} has no members"),
            StateViolation::KeyMismatch { key, id } => {
                write!(f, "pattern stored under key {key} carries id {id}")
            }
            StateViolation::TooManyPatterns { k, n } => write!(f, "K = {k} exceeds N = {n}"),
            StateViolation::ReusableId { id, next_id } => {
                write!(f, "pattern id {id} is not below the next free id {next_id}")
            }
            StateViolation::TrainingOutsideMembers { pattern, point } => write!(
                f,
                "pattern {pattern} trains on frame {} which is not a member",
                point.frame
            ),
            StateViolation::NonPositiveAlpha(a) => write!(f, "alpha = {a} must be > 0"),
        }
    }
}

/// Lists every violated invariant of `state`; empty when consistent.
pub fn validate_state(state: &MixtureState) -> Vec<StateViolation> {
    let mut out = Vec::new();
    let n = state.n();
    let total: usize = state.patterns.values().map(MotionPattern::count).sum();
    if total != n {
        out.push(StateViolation::CountMismatch { total, n });
    }
    for (frame, id) in state.assignments.iter().enumerate() {
        match state.patterns.get(id) {
            None => out.push(StateViolation::DanglingAssignment {
                frame,
                pattern: *id,
            }),
            Some(p) if !p.members.contains(&frame) => {
                out.push(StateViolation::MembershipMismatch {
                    frame,
                    pattern: *id,
                })
            }
            Some(_) => {}
        }
    }
    for (key, p) in &state.patterns {
        if *key != p.id {
            out.push(StateViolation::KeyMismatch { key: *key, id: p.id });
        }
        if p.members.is_empty() {
            out.push(StateViolation::EmptyPattern(p.id));
        }
        if p.id.0 >= state.next_id {
            out.push(StateViolation::ReusableId {
                id: p.id,
                next_id: state.next_id,
            });
        }
        for &frame in &p.members {
            if state.assignments.get(frame) != Some(&p.id) {
                out.push(StateViolation::MembershipMismatch {
                    frame,
                    pattern: p.id,
                });
            }
        }
        if let Some(point) = p
            .training
            .iter()
            .find(|r| !p.members.contains(&(r.frame as usize)))
        {
            out.push(StateViolation::TrainingOutsideMembers {
                pattern: p.id,
                point: *point,
            });
        }
    }
    if state.k() > n {
        out.push(StateViolation::TooManyPatterns { k: state.k(), n });
    }
    if !(state.alpha > 0.0) {
        out.push(StateViolation::NonPositiveAlpha(state.alpha));
    }
    out
}

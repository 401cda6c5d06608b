//! Optimizer iterations and instrumented trajectory runs.
//!
//! The super-accelerated momentum step evaluates the gradient at the lookahead
//! point `theta + sigma * m`:
//!
//! ```text
//! m'     = g m - eta grad L(theta + sigma m)
//! theta' = theta + m'
//! ```
//!
//! `sigma = 0` is the heavy-ball method and `sigma = g` is Nesterov momentum.
//! The RMSProp variant rescales the gradient component-wise by
//! `1 / sqrt(r' + eps)` with `r' = beta2 r + (1 - beta2) grad^2`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_dim, invalid, Error, Result};
use crate::landscape::Landscape;
use crate::linalg::{euclidean_distance, sup_norm};

/// Any `|theta_j|` above this is treated as divergence.
pub const DIVERGENCE_THRESHOLD: f64 = 1e8;
/// Number of trailing iterates examined by the trap detector.
pub const TRAP_WINDOW: usize = 50;
pub const TRAP_MAX_DISTINCT: usize = 4;
pub const TRAP_POINT_TOL: f64 = 1e-9;
pub const TRAP_MIN_GRADIENT: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Variant {
    PlainGd,
    MomentumSuperaccel,
    RmspropSuperaccel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ScheduleMode {
    Linear,
    Constant,
}

/// Lookahead schedule: start large and decay toward a moderate value.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SigmaSchedule {
    pub sigma_start: f64,
    pub sigma_end: f64,
    pub decay_steps: u64,
    pub mode: ScheduleMode,
}

impl SigmaSchedule {
    pub fn linear(sigma_start: f64, sigma_end: f64, decay_steps: u64) -> Result<Self> {
        let s = Self {
            sigma_start,
            sigma_end,
            decay_steps,
            mode: ScheduleMode::Linear,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.decay_steps == 0 {
            return Err(invalid("sigma schedule needs decay_steps >= 1"));
        }
        if !(self.sigma_start >= 0.0 && self.sigma_end >= 0.0) {
            return Err(invalid("sigma schedule endpoints must be non-negative"));
        }
        Ok(())
    }

    pub fn sigma_at(&self, iter: u64) -> f64 {
        match self.mode {
            ScheduleMode::Constant => self.sigma_start,
            ScheduleMode::Linear => {
                let frac = (iter as f64 / self.decay_steps as f64).min(1.0);
                self.sigma_start + (self.sigma_end - self.sigma_start) * frac
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OptimConfig {
    pub eta: f64,
    pub g: f64,
    pub sigma: f64,
    pub variant: Variant,
    pub beta2: f64,
    pub epsilon: f64,
    pub schedule: Option<SigmaSchedule>,
}

pub const DEFAULT_G: f64 = 0.9;
pub const DEFAULT_BETA2: f64 = 0.999;
pub const DEFAULT_EPSILON: f64 = 1e-7;

impl OptimConfig {
    pub fn plain_gd(eta: f64) -> Self {
        Self {
            eta,
            g: DEFAULT_G,
            sigma: 0.0,
            variant: Variant::PlainGd,
            beta2: DEFAULT_BETA2,
            epsilon: DEFAULT_EPSILON,
            schedule: None,
        }
    }

    pub fn momentum(eta: f64, g: f64, sigma: f64) -> Self {
        Self {
            g,
            sigma,
            variant: Variant::MomentumSuperaccel,
            ..Self::plain_gd(eta)
        }
    }

    pub fn rmsprop(eta: f64, g: f64, sigma: f64) -> Self {
        Self {
            variant: Variant::RmspropSuperaccel,
            ..Self::momentum(eta, g, sigma)
        }
    }

    pub fn with_schedule(mut self, schedule: SigmaSchedule) -> Self {
        self.schedule = Some(schedule);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(invalid("eta must be positive"));
        }
        if !(0.0..1.0).contains(&self.g) {
            return Err(invalid("g must lie in [0, 1)"));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(invalid("sigma must be non-negative"));
        }
        if !(self.beta2 > 0.0 && self.beta2 < 1.0) {
            return Err(invalid("beta2 must lie in (0, 1)"));
        }
        if !(self.epsilon > 0.0) {
            return Err(invalid("epsilon must be positive"));
        }
        if let Some(s) = &self.schedule {
            s.validate()?;
        }
        Ok(())
    }

    /// Lookahead in effect at iteration `iter`.
    pub fn sigma_at(&self, iter: u64) -> f64 {
        match &self.schedule {
            Some(s) => s.sigma_at(iter),
            None => self.sigma,
        }
    }
}

/// `alpha = g - k_eta * sigma - 1`, the combination through which the
/// lookahead enters the one-dimensional quadratic dynamics.
pub fn alpha_of(g: f64, k_eta: f64, sigma: f64) -> f64 {
    g - k_eta * sigma - 1.0
}

#[derive(Debug, Clone)]
pub struct OptimState {
    pub theta: Vec<f64>,
    pub m: Vec<f64>,
    pub r: Vec<f64>,
    pub iter: u64,
    lookahead: Vec<f64>,
    grad: Vec<f64>,
    theta_next: Vec<f64>,
}

impl PartialEq for OptimState {
    fn eq(&self, other: &Self) -> bool {
        self.theta == other.theta && self.m == other.m && self.r == other.r && self.iter == other.iter
    }
}

impl OptimState {
    /// Fresh state at `theta0` with zeroed accumulators.
    pub fn new(theta0: Vec<f64>) -> Self {
        let n = theta0.len();
        Self::with_accumulators(theta0, vec![0.0; n], vec![0.0; n])
    }

    pub fn with_accumulators(theta: Vec<f64>, m: Vec<f64>, r: Vec<f64>) -> Self {
        let n = theta.len();
        assert_eq!(m.len(), n, "momentum length");
        assert_eq!(r.len(), n, "second-moment length");
        Self {
            theta,
            m,
            r,
            iter: 0,
            lookahead: vec![0.0; n],
            grad: vec![0.0; n],
            theta_next: vec![0.0; n],
        }
    }

    pub fn dim(&self) -> usize {
        self.theta.len()
    }

    fn commit_theta(&mut self) -> Result<()> {
        let bad = self
            .theta_next
            .iter()
            .any(|t| !t.is_finite() || t.abs() > DIVERGENCE_THRESHOLD);
        if bad {
            return Err(Error::NonFinite { iter: self.iter + 1 });
        }
        core::mem::swap(&mut self.theta, &mut self.theta_next);
        self.iter += 1;
        Ok(())
    }
}

/// `theta' = theta - eta grad L(theta)`.
///
/// On error the state is left unchanged. This holds for every step function.
pub fn step_gd<L: Landscape + ?Sized>(state: &mut OptimState, landscape: &L, config: &OptimConfig) -> Result<()> {
    check_dim(landscape.dim(), state.dim())?;
    landscape.gradient(&state.theta, &mut state.grad);
    for i in 0..state.dim() {
        state.theta_next[i] = state.theta[i] - config.eta * state.grad[i];
    }
    state.commit_theta()
}

/// Momentum step with the gradient taken at `theta + sigma m`.
pub fn step_superaccel<L: Landscape + ?Sized>(
    state: &mut OptimState,
    landscape: &L,
    config: &OptimConfig,
) -> Result<()> {
    check_dim(landscape.dim(), state.dim())?;
    let sigma = config.sigma_at(state.iter);
    for i in 0..state.dim() {
        state.lookahead[i] = state.theta[i] + sigma * state.m[i];
    }
    landscape.gradient(&state.lookahead, &mut state.grad);
    // lookahead doubles as the buffer for m'
    for i in 0..state.dim() {
        let m_next = config.g * state.m[i] - config.eta * state.grad[i];
        state.lookahead[i] = m_next;
        state.theta_next[i] = state.theta[i] + m_next;
    }
    state.commit_theta()?;
    core::mem::swap(&mut state.m, &mut state.lookahead);
    Ok(())
}

/// RMSProp with momentum and lookahead; squaring, square root and division
/// are component-wise and `epsilon` sits inside the square root.
pub fn step_rmsprop_superaccel<L: Landscape + ?Sized>(
    state: &mut OptimState,
    landscape: &L,
    config: &OptimConfig,
) -> Result<()> {
    check_dim(landscape.dim(), state.dim())?;
    let sigma = config.sigma_at(state.iter);
    for i in 0..state.dim() {
        state.lookahead[i] = state.theta[i] + sigma * state.m[i];
    }
    landscape.gradient(&state.lookahead, &mut state.grad);
    // grad doubles as the buffer for r'
    for i in 0..state.dim() {
        let gi = state.grad[i];
        let r = config.beta2 * state.r[i] + (1.0 - config.beta2) * gi * gi;
        let m_next = config.g * state.m[i] - config.eta / libm::sqrt(r + config.epsilon) * gi;
        state.grad[i] = r;
        state.lookahead[i] = m_next;
        state.theta_next[i] = state.theta[i] + m_next;
    }
    state.commit_theta()?;
    core::mem::swap(&mut state.m, &mut state.lookahead);
    core::mem::swap(&mut state.r, &mut state.grad);
    Ok(())
}

/// Dispatches on `config.variant`.
pub fn step<L: Landscape + ?Sized>(state: &mut OptimState, landscape: &L, config: &OptimConfig) -> Result<()> {
    match config.variant {
        Variant::PlainGd => step_gd(state, landscape, config),
        Variant::MomentumSuperaccel => step_superaccel(state, landscape, config),
        Variant::RmspropSuperaccel => step_rmsprop_superaccel(state, landscape, config),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub iter: u64,
    pub theta: Vec<f64>,
    pub loss: f64,
    /// Euclidean distance to the landscape's minimum hint, when it has one.
    pub dist: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Termination {
    Completed,
    Diverged,
    Trapped,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub records: Vec<TrajectoryRecord>,
    pub terminated: Termination,
    pub config: OptimConfig,
}

impl Trajectory {
    pub fn last(&self) -> &TrajectoryRecord {
        self.records.last().expect("trajectory always holds the start point")
    }

    /// `(iter, theta[coord])` pairs.
    pub fn coordinate_series(&self, coord: usize) -> Vec<(f64, f64)> {
        self.records.iter().map(|r| (r.iter as f64, r.theta[coord])).collect()
    }

    pub fn losses(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.loss).collect()
    }
}

fn record<L: Landscape + ?Sized>(landscape: &L, iter: u64, theta: &[f64]) -> TrajectoryRecord {
    TrajectoryRecord {
        iter,
        theta: theta.to_vec(),
        loss: landscape.value(theta),
        dist: landscape.minimum_hint().map(|m| euclidean_distance(theta, m)),
    }
}

/// Runs `steps` iterations of the configured optimizer from `theta0` with
/// zeroed accumulators, recording every iterate.
///
/// Divergence (`|theta_j| > 1e8` or non-finite) stops the recording and labels
/// the run `Diverged`. A run whose final 50 iterates visit at most 4 distinct
/// points, all with gradient sup-norm above 1e-4, is labelled `Trapped`.
pub fn run_trajectory<L: Landscape + ?Sized>(
    landscape: &L,
    config: &OptimConfig,
    theta0: &[f64],
    steps: usize,
) -> Result<Trajectory> {
    config.validate()?;
    check_dim(landscape.dim(), theta0.len())?;
    if steps == 0 {
        return Err(invalid("steps must be positive"));
    }
    let mut state = OptimState::new(theta0.to_vec());
    let mut records = Vec::with_capacity(steps + 1);
    records.push(record(landscape, 0, &state.theta));
    let mut terminated = Termination::Completed;
    for _ in 0..steps {
        match step(&mut state, landscape, config) {
            Ok(()) => records.push(record(landscape, state.iter, &state.theta)),
            Err(Error::NonFinite { .. }) => {
                terminated = Termination::Diverged;
                break;
            }
            Err(e) => return Err(e),
        }
    }
    if terminated == Termination::Completed && is_trapped(landscape, &records) {
        terminated = Termination::Trapped;
    }
    Ok(Trajectory {
        records,
        terminated,
        config: *config,
    })
}

fn is_trapped<L: Landscape + ?Sized>(landscape: &L, records: &[TrajectoryRecord]) -> bool {
    if records.len() < TRAP_WINDOW {
        return false;
    }
    let tail = &records[records.len() - TRAP_WINDOW..];
    let mut distinct: Vec<&[f64]> = Vec::new();
    for r in tail {
        let seen = distinct.iter().any(|p| {
            p.iter()
                .zip(&r.theta)
                .all(|(a, b)| (a - b).abs() <= TRAP_POINT_TOL)
        });
        if !seen {
            if distinct.len() == TRAP_MAX_DISTINCT {
                return false;
            }
            distinct.push(&r.theta);
        }
    }
    let mut grad = vec![0.0; landscape.dim()];
    distinct.iter().all(|p| {
        landscape.gradient(p, &mut grad);
        sup_norm(&grad) > TRAP_MIN_GRADIENT
    })
}

/// Iterates the rearranged one-dimensional quadratic recursion
/// `m_i = m_{i-1} + alpha m_{i-1} - k_eta theta_i`, `theta_{i+1} = theta_i + m_i`
/// from `m_{-1} = 0`. Returns `theta_0 ..= theta_steps`.
///
/// Exists as an independent cross-check of [`step_superaccel`] on parabolas.
pub fn alpha_form_parabola(k_eta: f64, g: f64, sigma: f64, theta0: f64, steps: usize) -> Vec<f64> {
    let alpha = alpha_of(g, k_eta, sigma);
    let mut out = Vec::with_capacity(steps + 1);
    let (mut theta, mut m) = (theta0, 0.0);
    out.push(theta);
    for _ in 0..steps {
        m = m + alpha * m - k_eta * theta;
        theta += m;
        out.push(theta);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::landscape::{parabola, Synth2dRaw};

    #[test]
    fn alpha_values() {
        assert!((alpha_of(0.9, 0.01, 1.0) + 0.11).abs() < 1e-15);
        assert!((alpha_of(0.9, 0.37, 0.0) + 0.1).abs() < 1e-15);
        assert!((alpha_of(0.9, 0.01, 10.0) + 0.2).abs() < 1e-15);
    }

    #[test]
    fn gd_single_step() {
        let p = parabola(1.0).unwrap();
        let mut s = OptimState::new(vec![1.0]);
        step_gd(&mut s, &p, &OptimConfig::plain_gd(0.1)).unwrap();
        assert!((s.theta[0] - 0.9).abs() < 1e-15);
        assert_eq!(s.iter, 1);
        assert_eq!(s.m, vec![0.0]);
    }

    #[test]
    fn gd_geometric_decay() {
        let p = parabola(1.0).unwrap();
        let eta = 0.125;
        let cfg = OptimConfig::plain_gd(eta);
        let mut s = OptimState::new(vec![1.0]);
        let mut expected = 1.0f64;
        for i in 1..=200 {
            step_gd(&mut s, &p, &cfg).unwrap();
            // theta - theta/8 and 0.875 * theta round the same exact value
            expected *= 1.0 - eta;
            assert_eq!(s.theta[0], expected, "step {i}");
        }
    }

    #[test]
    fn gd_blows_up_and_flags() {
        let p = parabola(1.0).unwrap();
        let cfg = OptimConfig::plain_gd(3.0);
        let mut s = OptimState::new(vec![1.0]);
        let mut steps = 0;
        let err = loop {
            let before = s.theta[0];
            match step_gd(&mut s, &p, &cfg) {
                Ok(()) => {
                    assert_eq!(s.theta[0], -2.0 * before);
                    steps += 1;
                }
                Err(e) => break e,
            }
        };
        // 2^26 < 1e8 < 2^27
        assert_eq!(steps, 26);
        assert_eq!(err, Error::NonFinite { iter: 27 });
        assert_eq!(s.iter, 26);
    }

    #[test]
    fn superaccel_hand_step() {
        let p = parabola(1.0).unwrap();
        let cfg = OptimConfig::momentum(0.01, 0.9, 2.0);
        let mut s = OptimState::with_accumulators(vec![1.0], vec![-0.1], vec![0.0]);
        step_superaccel(&mut s, &p, &cfg).unwrap();
        assert!((s.m[0] + 0.098).abs() < 1e-15);
        assert!((s.theta[0] - 0.902).abs() < 1e-15);
    }

    #[test]
    fn rmsprop_hand_step() {
        let p = parabola(1.0).unwrap();
        let cfg = OptimConfig::rmsprop(0.01, 0.9, 3.0);
        let mut s = OptimState::new(vec![1.0]);
        step_rmsprop_superaccel(&mut s, &p, &cfg).unwrap();
        // r' = 1e-3, m' = -0.01 / sqrt(1e-3 + 1e-7)
        assert!((s.r[0] - 1e-3).abs() < 1e-18);
        assert!((s.m[0] + 0.316_212_0).abs() < 1e-6, "{}", s.m[0]);
        assert!((s.theta[0] - 0.683_788_0).abs() < 1e-6, "{}", s.theta[0]);
    }

    #[test]
    fn rmsprop_unit_beta2_freezes_r() {
        let p = parabola(1.0).unwrap();
        let mut cfg = OptimConfig::rmsprop(0.01, 0.9, 1.0);
        cfg.beta2 = 1.0;
        let mut s = OptimState::with_accumulators(vec![1.0], vec![0.0], vec![0.25]);
        for _ in 0..20 {
            step_rmsprop_superaccel(&mut s, &p, &cfg).unwrap();
            assert_eq!(s.r, vec![0.25]);
        }
    }

    #[test]
    fn rmsprop_fixed_point_at_minimum() {
        let p = parabola(1.0).unwrap();
        let cfg = OptimConfig::rmsprop(0.01, 0.9, 2.0);
        let mut s = OptimState::new(vec![0.0]);
        for _ in 0..5 {
            step_rmsprop_superaccel(&mut s, &p, &cfg).unwrap();
        }
        assert_eq!((s.theta[0], s.m[0], s.r[0]), (0.0, 0.0, 0.0));
    }

    #[test]
    fn error_leaves_state_untouched() {
        let p = parabola(1.0).unwrap();
        let cfg = OptimConfig::momentum(1e9, 0.9, 1.0);
        let mut s = OptimState::new(vec![1.0]);
        let before = s.clone();
        assert!(step_superaccel(&mut s, &p, &cfg).is_err());
        assert_eq!(s, before);
    }

    #[test]
    fn schedule_interpolates() {
        let s = SigmaSchedule::linear(5.0, 2.0, 100).unwrap();
        assert_eq!(s.sigma_at(0), 5.0);
        assert_eq!(s.sigma_at(50), 3.5);
        assert_eq!(s.sigma_at(100), 2.0);
        assert_eq!(s.sigma_at(1000), 2.0);
        let c = SigmaSchedule {
            mode: ScheduleMode::Constant,
            ..s
        };
        assert_eq!(c.sigma_at(77), 5.0);
        assert!(SigmaSchedule::linear(5.0, 2.0, 0).is_err());
    }

    #[test]
    fn schedule_drives_lookahead() {
        let p = parabola(1.0).unwrap();
        let sched = SigmaSchedule::linear(5.0, 2.0, 3).unwrap();
        let cfg = OptimConfig::momentum(0.1, 0.9, 0.0).with_schedule(sched);
        let mut s = OptimState::with_accumulators(vec![1.0], vec![-0.5], vec![0.0]);
        step_superaccel(&mut s, &p, &cfg).unwrap();
        // sigma(0) = 5: lookahead 1 - 2.5 = -1.5
        assert!((s.m[0] - (0.9 * -0.5 + 0.1 * 1.5)).abs() < 1e-15);
    }

    #[test]
    fn config_validation() {
        assert!(OptimConfig::momentum(0.01, 0.9, 1.0).validate().is_ok());
        assert!(OptimConfig::momentum(0.0, 0.9, 1.0).validate().is_err());
        assert!(OptimConfig::momentum(0.01, 1.0, 1.0).validate().is_err());
        assert!(OptimConfig::momentum(0.01, 0.9, -1.0).validate().is_err());
        let mut c = OptimConfig::rmsprop(0.01, 0.9, 1.0);
        c.beta2 = 1.0;
        assert!(c.validate().is_err());
        c.beta2 = 0.999;
        c.epsilon = 0.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn trajectory_bookkeeping() {
        let p = parabola(1.0).unwrap();
        let t = run_trajectory(&p, &OptimConfig::momentum(0.01, 0.9, 1.0), &[1.0], 800).unwrap();
        assert_eq!(t.records.len(), 801);
        assert_eq!(t.terminated, Termination::Completed);
        for (i, r) in t.records.iter().enumerate() {
            assert_eq!(r.iter, i as u64);
            assert_eq!(r.dist, Some(r.theta[0].abs()));
        }
        let signs = t.records.windows(2).filter(|w| w[0].theta[0] * w[1].theta[0] < 0.0).count();
        assert!(signs >= 4);
        // envelope decreases: peak |theta| per 100-step block shrinks
        let peaks: Vec<f64> = t
            .records
            .chunks(100)
            .map(|c| c.iter().fold(0.0f64, |m, r| m.max(r.theta[0].abs())))
            .collect();
        assert!(peaks.windows(2).all(|w| w[1] < w[0]), "{peaks:?}");
    }

    #[test]
    fn trajectory_diverges() {
        let p = parabola(1.0).unwrap();
        let t = run_trajectory(&p, &OptimConfig::plain_gd(3.0), &[1.0], 100).unwrap();
        assert_eq!(t.terminated, Termination::Diverged);
        assert_eq!(t.records.len(), 27);
    }

    #[test]
    fn trajectory_rejects_bad_input() {
        let p = parabola(1.0).unwrap();
        let cfg = OptimConfig::momentum(0.01, 0.9, 1.0);
        assert!(run_trajectory(&p, &cfg, &[1.0, 2.0], 10).is_err());
        assert!(run_trajectory(&p, &cfg, &[1.0], 0).is_err());
        assert!(run_trajectory(&Synth2dRaw, &OptimConfig::momentum(-1.0, 0.9, 1.0), &[0.0, 0.0], 5).is_err());
    }

    #[test]
    fn alpha_form_matches_stepper() {
        let (k_eta, g, sigma) = (0.01, 0.9, 3.0);
        let p = parabola(1.0).unwrap();
        let t = run_trajectory(&p, &OptimConfig::momentum(k_eta, g, sigma), &[1.0], 500).unwrap();
        let alt = alpha_form_parabola(k_eta, g, sigma, 1.0, 500);
        for (r, a) in t.records.iter().zip(&alt) {
            assert!((r.theta[0] - a).abs() < 1e-14);
        }
    }
}

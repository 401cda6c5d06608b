//! Relaxation-timescale extraction and numerical sweeps for the optimal
//! lookahead.
//!
//! Trajectories are fitted either by a damped cosine
//! `amplitude * exp(-t/T) * cos(omega t + delta)` (Gauss-Newton) or by a
//! straight line through `log |x|` (the exponential envelope). A sweep runs a
//! trajectory per grid `sigma`, extracts `T(sigma)` and refines the grid
//! minimum by golden-section search.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::landscape::{parabola, Landscape};
use crate::linalg::{solve, Matrix};
use crate::optim::{run_trajectory, OptimConfig, Termination, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum FitMethod {
    Oscillatory,
    Envelope,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FitResult {
    /// Relaxation timescale `T`; `+inf` when no decay was found.
    pub timescale: f64,
    /// Fitted angular frequency; zero for envelope fits.
    pub omega_bar: f64,
    /// Phase in `(-pi, pi]`.
    pub delta: f64,
    pub amplitude: f64,
    pub rmse: f64,
    pub converged: bool,
    pub method: FitMethod,
    pub iterations: usize,
}

impl FitResult {
    fn not_converged(method: FitMethod) -> Self {
        Self {
            timescale: f64::INFINITY,
            omega_bar: 0.0,
            delta: 0.0,
            amplitude: 0.0,
            rmse: f64::INFINITY,
            converged: false,
            method,
            iterations: 0,
        }
    }

    pub fn model(&self, t: f64) -> f64 {
        self.amplitude * libm::exp(-t / self.timescale) * libm::cos(self.omega_bar * t + self.delta)
    }
}

pub const MIN_OSCILLATORY_SAMPLES: usize = 20;
pub const MIN_ENVELOPE_SAMPLES: usize = 10;
pub const MIN_PEAKS: usize = 3;
pub const MIN_SIGN_CHANGES: usize = 2;
/// Initialization looks at samples up to the last one with
/// `|x| >= fraction * max |x|`, keeping noisy tails out of the zero-crossing
/// and peak statistics. The fraction starts here and halves while
/// the window holds too few crossings or peaks.
pub const INIT_WINDOW_FRACTION: f64 = 0.02;
const INIT_WINDOW_FLOOR: f64 = 1e-12;
pub const GN_MAX_ITER: usize = 500;
pub const GN_REL_TOL: f64 = 1e-10;
pub const GN_MAX_HALVINGS: usize = 30;
const LOG_FLOOR: f64 = 1e-300;

/// Least-squares line `y = slope x + intercept`.
fn line_fit(points: impl Iterator<Item = (f64, f64)> + Clone) -> Option<(f64, f64)> {
    let n = points.clone().count() as f64;
    if n < 2.0 {
        return None;
    }
    let (sx, sy) = points.clone().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / n, sy / n);
    let (sxx, sxy) = points.fold((0.0, 0.0), |(a, b), (x, y)| {
        (a + (x - mx) * (x - mx), b + (x - mx) * (y - my))
    });
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

fn wrap_phase(mut d: f64) -> f64 {
    d = libm::fmod(d, 2.0 * PI);
    if d <= -PI {
        d += 2.0 * PI;
    } else if d > PI {
        d -= 2.0 * PI;
    }
    d
}

/// Zero-crossing times (linear interpolation), ignoring exact zeros.
fn sign_change_times(series: &[(f64, f64)]) -> Vec<f64> {
    let mut out = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    for &(t, x) in series {
        if x == 0.0 {
            continue;
        }
        if let Some((tp, xp)) = prev {
            if (xp < 0.0) != (x < 0.0) {
                out.push(tp + xp / (xp - x) * (t - tp));
            }
        }
        prev = Some((t, x));
    }
    out
}

fn strict_peaks(series: &[(f64, f64)]) -> Vec<(f64, f64)> {
    series
        .windows(3)
        .filter(|w| w[1].1.abs() > w[0].1.abs() && w[1].1.abs() > w[2].1.abs())
        .map(|w| (w[1].0, w[1].1.abs()))
        .collect()
}

fn init_window(series: &[(f64, f64)], fraction: f64) -> &[(f64, f64)] {
    let max = series.iter().fold(0.0f64, |m, p| m.max(p.1.abs()));
    let cut = series
        .iter()
        .rposition(|p| p.1.abs() >= fraction * max)
        .unwrap_or(0);
    &series[..(cut + 1).min(series.len())]
}

fn ssr(series: &[(f64, f64)], p: &[f64; 4]) -> f64 {
    series
        .iter()
        .map(|&(t, x)| {
            let r = x - p[0] * libm::exp(-p[1] * t) * libm::cos(p[2] * t + p[3]);
            r * r
        })
        .sum()
}

/// Least-squares fit of `amplitude * exp(-t/T) * cos(omega t + delta)`.
///
/// Initialization: `T` from a line through the log of strict local maxima of
/// `|x|`, `omega` from pi over the mean spacing of sign changes, then amplitude
/// and phase by linear least squares with `T` and `omega` held fixed.
/// Refinement: damped Gauss-Newton on all four parameters.
///
/// Returns `converged = false` (not an error) when the series has fewer than
/// two sign changes or three peaks; callers should fall back to
/// [`fit_exponential_envelope`].
pub fn fit_damped_cosine(series: &[(f64, f64)]) -> Result<FitResult> {
    if series.len() < MIN_OSCILLATORY_SAMPLES {
        return Err(Error::Degenerate(format!(
            "need at least {MIN_OSCILLATORY_SAMPLES} samples, got {}",
            series.len()
        )));
    }
    if series.iter().all(|p| p.1 == 0.0) {
        return Err(Error::Degenerate("series is identically zero".into()));
    }
    if series.iter().any(|p| !p.0.is_finite() || !p.1.is_finite()) {
        return Err(Error::Degenerate("series contains non-finite samples".into()));
    }
    if sign_change_times(series).len() < MIN_SIGN_CHANGES {
        return Ok(FitResult::not_converged(FitMethod::Oscillatory));
    }
    // widen the initialization window until it holds enough oscillation
    let mut fraction = INIT_WINDOW_FRACTION;
    let (window, crossings, peaks) = loop {
        let window = init_window(series, fraction);
        let crossings = sign_change_times(window);
        let peaks = strict_peaks(window);
        if crossings.len() >= MIN_SIGN_CHANGES && peaks.len() >= MIN_PEAKS {
            break (window, crossings, peaks);
        }
        if window.len() == series.len() || fraction < INIT_WINDOW_FLOOR {
            return Ok(FitResult::not_converged(FitMethod::Oscillatory));
        }
        fraction *= 0.5;
    };
    let half_period = (crossings[crossings.len() - 1] - crossings[0]) / (crossings.len() - 1) as f64;
    let omega0 = PI / half_period;
    let rate0 = match line_fit(peaks.iter().map(|&(t, a)| (t, libm::log(a)))) {
        Some((slope, _)) if slope < 0.0 => -slope,
        _ => return Ok(FitResult::not_converged(FitMethod::Oscillatory)),
    };
    let (amp0, delta0) = linear_amplitude_phase(window, rate0, omega0);

    let mut p = [amp0, rate0, omega0, delta0];
    let mut cur = ssr(series, &p);
    let mut converged = false;
    let mut iterations = 0;
    while iterations < GN_MAX_ITER {
        iterations += 1;
        let Some(delta) = gauss_newton_direction(series, &p) else {
            break;
        };
        let norm_p = libm::sqrt(p.iter().map(|v| v * v).sum::<f64>());
        let norm_d = libm::sqrt(delta.iter().map(|v| v * v).sum::<f64>());
        if norm_d <= GN_REL_TOL * norm_p {
            for (pi, di) in p.iter_mut().zip(&delta) {
                *pi += di;
            }
            let next = ssr(series, &p);
            if next.is_finite() {
                cur = next.min(cur);
            }
            converged = true;
            break;
        }
        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..=GN_MAX_HALVINGS {
            let trial = [
                p[0] + scale * delta[0],
                p[1] + scale * delta[1],
                p[2] + scale * delta[2],
                p[3] + scale * delta[3],
            ];
            let s = ssr(series, &trial);
            if s.is_finite() && s < cur {
                p = trial;
                cur = s;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if !accepted {
            // no descent left along the GN direction: at a minimum to working precision
            converged = cur.is_finite() && norm_d <= 1e-6 * norm_p;
            break;
        }
    }

    let [mut amplitude, rate, mut omega, mut phase] = p;
    if amplitude < 0.0 {
        amplitude = -amplitude;
        phase += PI;
    }
    if omega < 0.0 {
        omega = -omega;
        phase = -phase;
    }
    let rmse = libm::sqrt(cur / series.len() as f64);
    let converged = converged && rate > 0.0 && rmse.is_finite();
    Ok(FitResult {
        timescale: 1.0 / rate,
        omega_bar: omega,
        delta: wrap_phase(phase),
        amplitude,
        rmse,
        converged,
        method: FitMethod::Oscillatory,
        iterations,
    })
}

fn linear_amplitude_phase(series: &[(f64, f64)], rate: f64, omega: f64) -> (f64, f64) {
    // x ~ e^{-rate t} (p cos wt + q sin wt), with a cos(wt + d) = a cos d cos wt - a sin d sin wt
    let (mut cc, mut cs, mut ss, mut xc, mut xs) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(t, x) in series {
        let e = libm::exp(-rate * t);
        let c = e * libm::cos(omega * t);
        let s = e * libm::sin(omega * t);
        cc += c * c;
        cs += c * s;
        ss += s * s;
        xc += x * c;
        xs += x * s;
    }
    let det = cc * ss - cs * cs;
    if det == 0.0 {
        return (series[0].1, 0.0);
    }
    let p = (xc * ss - xs * cs) / det;
    let q = (xs * cc - xc * cs) / det;
    (libm::hypot(p, q), libm::atan2(-q, p))
}

/// Column-scaled Gauss-Newton direction for the four-parameter model.
fn gauss_newton_direction(series: &[(f64, f64)], p: &[f64; 4]) -> Option<[f64; 4]> {
    let mut jtj = [[0.0f64; 4]; 4];
    let mut jtr = [0.0f64; 4];
    for &(t, x) in series {
        let e = libm::exp(-p[1] * t);
        let phase = p[2] * t + p[3];
        let (s, c) = (libm::sin(phase), libm::cos(phase));
        let f = p[0] * e * c;
        let r = x - f;
        let j = [e * c, -t * f, -p[0] * e * t * s, -p[0] * e * s];
        for a in 0..4 {
            jtr[a] += j[a] * r;
            for b in 0..4 {
                jtj[a][b] += j[a] * j[b];
            }
        }
    }
    let d: Vec<f64> = (0..4)
        .map(|a| if jtj[a][a] > 0.0 { 1.0 / libm::sqrt(jtj[a][a]) } else { 1.0 })
        .collect();
    let mut m = Matrix::zeros(4);
    for a in 0..4 {
        for b in 0..4 {
            m.set(a, b, jtj[a][b] * d[a] * d[b]);
        }
    }
    let rhs = (0..4).map(|a| jtr[a] * d[a]).collect();
    let y = solve(m, rhs)?;
    let out = [y[0] * d[0], y[1] * d[1], y[2] * d[2], y[3] * d[3]];
    out.iter().all(|v| v.is_finite()).then_some(out)
}

/// Line fit of `log |x|` against `t`; `T = -1 / slope`.
///
/// Non-decaying input (slope >= 0) yields `T = +inf` with `converged = false`.
pub fn fit_exponential_envelope(series: &[(f64, f64)]) -> Result<FitResult> {
    let usable = || {
        series
            .iter()
            .filter(|p| p.1.abs() >= LOG_FLOOR && p.1.is_finite())
            .map(|&(t, x)| (t, libm::log(x.abs())))
    };
    let n = usable().count();
    if n < MIN_ENVELOPE_SAMPLES {
        return Err(Error::Degenerate(format!(
            "need at least {MIN_ENVELOPE_SAMPLES} nonzero samples, got {n}"
        )));
    }
    let (slope, intercept) =
        line_fit(usable()).ok_or_else(|| Error::Degenerate("all samples share one time".into()))?;
    if !(slope < 0.0) {
        return Ok(FitResult::not_converged(FitMethod::Envelope));
    }
    let amplitude = libm::exp(intercept);
    let sq: f64 = series
        .iter()
        .map(|&(t, x)| {
            let r = x.abs() - amplitude * libm::exp(slope * t);
            r * r
        })
        .sum();
    Ok(FitResult {
        timescale: -1.0 / slope,
        omega_bar: 0.0,
        delta: 0.0,
        amplitude,
        rmse: libm::sqrt(sq / series.len() as f64),
        converged: true,
        method: FitMethod::Envelope,
        iterations: 1,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum TimescaleMode {
    /// Damped cosine first, envelope when that does not converge.
    Auto,
    Oscillatory,
    Envelope,
}

/// Signed displacement of coordinate 0 from the minimum hint (or from 0).
pub fn displacement_series(traj: &Trajectory, reference: Option<&[f64]>) -> Vec<(f64, f64)> {
    let origin = reference.map_or(0.0, |m| m[0]);
    traj.records
        .iter()
        .map(|r| (r.iter as f64, r.theta[0] - origin))
        .collect()
}

pub fn extract_timescale(traj: &Trajectory, mode: TimescaleMode) -> Result<FitResult> {
    extract_timescale_about(traj, None, mode)
}

/// As [`extract_timescale`], measuring displacement from `reference`.
pub fn extract_timescale_about(traj: &Trajectory, reference: Option<&[f64]>, mode: TimescaleMode) -> Result<FitResult> {
    if traj.terminated == Termination::Diverged {
        return Err(Error::Diverged);
    }
    let series = displacement_series(traj, reference);
    match mode {
        TimescaleMode::Oscillatory => fit_damped_cosine(&series),
        TimescaleMode::Envelope => fit_exponential_envelope(&series),
        TimescaleMode::Auto => match fit_damped_cosine(&series) {
            Ok(fit) if fit.converged => Ok(fit),
            _ => fit_exponential_envelope(&series),
        },
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScanPoint {
    pub sigma: f64,
    pub fit: Option<FitResult>,
    /// Why the point was skipped, when it was.
    pub error: Option<String>,
}

impl ScanPoint {
    pub fn timescale(&self) -> Option<f64> {
        self.fit.filter(|f| f.converged).map(|f| f.timescale)
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SigmaScan {
    pub sigma_grid: Vec<f64>,
    /// `T(sigma)` per grid point; `+inf` where the point was skipped.
    pub timescales: Vec<f64>,
    pub points: Vec<ScanPoint>,
    pub sigma_star: Option<f64>,
    pub well_defined: bool,
}

/// Both grid neighbours must exceed the grid minimum by this factor for the
/// minimum to count as interior.
pub const INTERIOR_MIN_FACTOR: f64 = 1.01;
pub const GOLDEN_WIDTH: f64 = 1e-3;

/// Golden-section search on `[lo, hi]` until the bracket is narrower than
/// `width`; returns the bracket midpoint.
pub fn golden_section<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, width: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > width {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

pub fn sigma_grid(sigma_min: f64, sigma_max: f64, n_grid: usize) -> Vec<f64> {
    (0..n_grid)
        .map(|j| sigma_min + (sigma_max - sigma_min) * j as f64 / (n_grid - 1) as f64)
        .collect()
}

/// Generic sweep: `timescale_at(sigma)` is evaluated on the grid, the grid
/// minimum is tested for being interior and refined by golden section.
pub fn scan_sigma<F>(grid: Vec<f64>, mut timescale_at: F) -> SigmaScan
where
    F: FnMut(f64) -> Result<FitResult>,
{
    let points: Vec<ScanPoint> = grid
        .iter()
        .map(|&sigma| match timescale_at(sigma) {
            Ok(fit) if fit.converged => ScanPoint {
                sigma,
                fit: Some(fit),
                error: None,
            },
            Ok(fit) => ScanPoint {
                sigma,
                fit: Some(fit),
                error: Some("fit did not converge".into()),
            },
            Err(e) => ScanPoint {
                sigma,
                fit: None,
                error: Some(format!("{e}")),
            },
        })
        .collect();
    let timescales: Vec<f64> = points.iter().map(|p| p.timescale().unwrap_or(f64::INFINITY)).collect();

    let best = timescales
        .iter()
        .enumerate()
        .filter(|(_, t)| t.is_finite())
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(j, _)| j);
    let interior = best.filter(|&j| {
        j > 0
            && j + 1 < timescales.len()
            && timescales[j - 1] >= INTERIOR_MIN_FACTOR * timescales[j]
            && timescales[j + 1] >= INTERIOR_MIN_FACTOR * timescales[j]
    });
    let sigma_star = interior.map(|j| {
        let (lo, hi) = (grid[j - 1], grid[j + 1]);
        let objective = |s: f64| match timescale_at(s) {
            Ok(fit) if fit.converged => fit.timescale,
            _ => f64::INFINITY,
        };
        golden_section(objective, lo, hi, GOLDEN_WIDTH).clamp(lo, hi)
    });
    SigmaScan {
        sigma_grid: grid,
        timescales,
        points,
        well_defined: sigma_star.is_some(),
        sigma_star,
    }
}

/// Trajectory length used for the parabola sweep at a given `k eta`.
pub fn sweep_steps(k_eta: f64) -> usize {
    (libm::ceil(50.0 / libm::sqrt(k_eta)) as usize).max(800)
}

fn validate_grid(sigma_min: f64, sigma_max: f64, n_grid: usize) -> Result<()> {
    if !(sigma_min < sigma_max) {
        return Err(invalid("sigma_min must be below sigma_max"));
    }
    if n_grid < 8 {
        return Err(invalid("sigma grid needs at least 8 points"));
    }
    Ok(())
}

/// Sweeps the momentum lookahead on the unit parabola (learning rate `k_eta`,
/// start `theta = 1`) and locates the `sigma` with the fastest relaxation.
pub fn find_sigma_star_numeric(k_eta: f64, g: f64, sigma_min: f64, sigma_max: f64, n_grid: usize) -> Result<SigmaScan> {
    validate_grid(sigma_min, sigma_max, n_grid)?;
    if !(k_eta > 0.0) {
        return Err(invalid("k_eta must be positive"));
    }
    OptimConfig::momentum(k_eta, g, sigma_min.max(0.0)).validate()?;
    let landscape = parabola(1.0)?;
    let steps = sweep_steps(k_eta);
    let timescale_at = |sigma: f64| {
        let traj = run_trajectory(&landscape, &OptimConfig::momentum(k_eta, g, sigma), &[1.0], steps)?;
        extract_timescale(&traj, TimescaleMode::Auto)
    };
    Ok(scan_sigma(sigma_grid(sigma_min, sigma_max, n_grid), timescale_at))
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RmspropScanSettings {
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub n_grid: usize,
    pub steps: usize,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for RmspropScanSettings {
    fn default() -> Self {
        Self {
            sigma_min: 0.0,
            sigma_max: 10.0,
            n_grid: 41,
            steps: 1000,
            beta2: crate::optim::DEFAULT_BETA2,
            epsilon: crate::optim::DEFAULT_EPSILON,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RmspropScanRow {
    pub eta: f64,
    pub scan: Option<SigmaScan>,
    pub error: Option<String>,
}

/// Envelope-fit timescale of super-accelerated RMSProp on `k theta^2 / 2`
/// from `theta = 1`.
pub fn rmsprop_timescale(k: f64, eta: f64, g: f64, sigma: f64, settings: &RmspropScanSettings) -> Result<FitResult> {
    let landscape = parabola(k)?;
    let mut cfg = OptimConfig::rmsprop(eta, g, sigma);
    cfg.beta2 = settings.beta2;
    cfg.epsilon = settings.epsilon;
    let traj = run_trajectory(&landscape, &cfg, &[1.0], settings.steps)?;
    extract_timescale(&traj, TimescaleMode::Envelope)
}

/// Optimal RMSProp lookahead per learning rate. Per-eta failures are recorded
/// in the row and the scan moves on.
pub fn rmsprop_sigma_star_scan(eta_grid: &[f64], k: f64, g: f64, settings: &RmspropScanSettings) -> Result<Vec<RmspropScanRow>> {
    validate_grid(settings.sigma_min, settings.sigma_max, settings.n_grid)?;
    parabola(k)?;
    let rows = eta_grid
        .iter()
        .map(|&eta| {
            let checked = OptimConfig::rmsprop(eta, g, settings.sigma_min.max(0.0)).validate();
            match checked {
                Ok(()) => RmspropScanRow {
                    eta,
                    scan: Some(scan_sigma(
                        sigma_grid(settings.sigma_min, settings.sigma_max, settings.n_grid),
                        |sigma| rmsprop_timescale(k, eta, g, sigma, settings),
                    )),
                    error: None,
                },
                Err(e) => RmspropScanRow {
                    eta,
                    scan: None,
                    error: Some(format!("{e}")),
                },
            }
        })
        .collect();
    Ok(rows)
}

/// Convenience for callers holding any landscape: signed displacement series
/// of coordinate 0 relative to the landscape's minimum hint.
pub fn series_about_minimum<L: Landscape + ?Sized>(landscape: &L, traj: &Trajectory) -> Vec<(f64, f64)> {
    displacement_series(traj, landscape.minimum_hint())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sampled(amp: f64, t_scale: f64, omega: f64, delta: f64, t_end: usize) -> Vec<(f64, f64)> {
        (0..=t_end)
            .map(|i| {
                let t = i as f64;
                (t, amp * libm::exp(-t / t_scale) * libm::cos(omega * t + delta))
            })
            .collect()
    }

    #[test]
    fn recovers_own_family() {
        let fit = fit_damped_cosine(&sampled(1.0, 20.0, 0.3, 0.0, 300)).unwrap();
        assert!(fit.converged);
        assert!((fit.timescale - 20.0).abs() < 1e-6);
        assert!((fit.omega_bar - 0.3).abs() < 1e-6);
        assert!(fit.delta.abs() < 1e-6);
        assert!((fit.amplitude - 1.0).abs() < 1e-6);
    }

    #[test]
    fn pure_exponential_not_oscillatory() {
        let s: Vec<_> = (0..100).map(|i| (i as f64, libm::exp(-i as f64 / 10.0))).collect();
        assert!(!fit_damped_cosine(&s).unwrap().converged);
    }

    #[test]
    fn too_short_or_zero_is_degenerate() {
        let short: Vec<_> = (0..10).map(|i| (i as f64, 1.0)).collect();
        assert!(matches!(fit_damped_cosine(&short), Err(Error::Degenerate(_))));
        let zeros: Vec<_> = (0..50).map(|i| (i as f64, 0.0)).collect();
        assert!(matches!(fit_damped_cosine(&zeros), Err(Error::Degenerate(_))));
    }

    #[test]
    fn envelope_recovers_exponential() {
        let s: Vec<_> = (0..60).map(|i| (i as f64, 3.0 * libm::exp(-i as f64 / 7.0))).collect();
        let fit = fit_exponential_envelope(&s).unwrap();
        assert!(fit.converged);
        assert!((fit.timescale - 7.0).abs() < 1e-9);
        assert!((fit.amplitude - 3.0).abs() < 1e-9);
        assert_eq!(fit.omega_bar, 0.0);
    }

    #[test]
    fn envelope_constant_not_converged() {
        let s: Vec<_> = (0..60).map(|i| (i as f64, 2.0)).collect();
        let fit = fit_exponential_envelope(&s).unwrap();
        assert!(!fit.converged);
        assert_eq!(fit.timescale, f64::INFINITY);
        let few: Vec<_> = (0..5).map(|i| (i as f64, 2.0)).collect();
        assert!(fit_exponential_envelope(&few).is_err());
    }

    #[test]
    fn golden_section_quadratic() {
        let x = golden_section(|x| (x - 1.234) * (x - 1.234), 0.0, 3.0, 1e-6);
        assert!((x - 1.234).abs() < 1e-6);
    }

    #[test]
    fn phase_wrapping() {
        assert!((wrap_phase(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap_phase(-PI) - PI).abs() < 1e-12);
        assert!((wrap_phase(0.5) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn grid_validation() {
        assert!(find_sigma_star_numeric(0.01, 0.9, 5.0, 1.0, 20).is_err());
        assert!(find_sigma_star_numeric(0.01, 0.9, 0.0, 10.0, 4).is_err());
    }

    fn parabola_run(k_eta: f64, sigma: f64, steps: usize) -> Trajectory {
        let l = parabola(1.0).unwrap();
        run_trajectory(&l, &OptimConfig::momentum(k_eta, 0.9, sigma), &[1.0], steps).unwrap()
    }

    #[test]
    fn parabola_timescale_near_ode3() {
        let fit = extract_timescale(&parabola_run(0.01, 1.0, 800), TimescaleMode::Oscillatory).unwrap();
        assert!(fit.converged);
        let a = -(0.9 - 0.01 - 1.0) / (1.0 + (0.9 - 0.01 - 1.0) / 2.0);
        assert!((fit.timescale / (2.0 / a) - 1.0).abs() < 0.15, "{}", fit.timescale);
    }

    #[test]
    fn auto_mode_choice() {
        let under = extract_timescale(&parabola_run(0.01, 1.0, 800), TimescaleMode::Auto).unwrap();
        assert_eq!(under.method, FitMethod::Oscillatory);
        let over = extract_timescale(&parabola_run(0.01, 20.0, 800), TimescaleMode::Auto).unwrap();
        assert_eq!(over.method, FitMethod::Envelope);
        assert!(over.converged && over.omega_bar == 0.0);
    }

    #[test]
    fn diverged_run_rejected() {
        let traj = parabola_run(0.25, 10.0, 800);
        assert_eq!(traj.terminated, Termination::Diverged);
        assert!(matches!(extract_timescale(&traj, TimescaleMode::Auto), Err(Error::Diverged)));
    }

    #[test]
    fn rmsprop_envelope_finite() {
        let fit = rmsprop_timescale(1.0, 0.01, 0.9, 2.0, &RmspropScanSettings::default()).unwrap();
        assert!(fit.converged && fit.timescale.is_finite() && fit.timescale > 0.0);
    }

    #[test]
    fn rmsprop_scan_small_eta_has_no_useful_lookahead() {
        let rows = rmsprop_sigma_star_scan(&[1e-4], 1.0, 0.9, &RmspropScanSettings::default()).unwrap();
        let scan = rows[0].scan.as_ref().unwrap();
        assert!(!scan.well_defined || scan.sigma_star.unwrap() <= 1.0, "{:?}", scan.sigma_star);
    }

    #[test]
    fn rmsprop_scan_records_bad_eta() {
        let rows = rmsprop_sigma_star_scan(&[-1.0, 0.05], 1.0, 0.9, &RmspropScanSettings::default()).unwrap();
        assert!(rows[0].scan.is_none() && rows[0].error.is_some());
        assert!(rows[1].scan.as_ref().unwrap().well_defined);
    }
}

//! Damped harmonic oscillator surrogates `x'' + A x' + B x = 0` for the
//! one-dimensional quadratic momentum dynamics.
//!
//! Three discretization readings of the same recursion give three coefficient
//! sets in terms of `alpha` and `k eta`:
//!
//! | variant | A                 | B                   |
//! |---------|-------------------|---------------------|
//! | ode1    | `-alpha`          | `k eta`             |
//! | ode2    | `-alpha/(1+alpha)`  | `k eta/(1+alpha)`   |
//! | ode3    | `-alpha/(1+alpha/2)`| `k eta/(1+alpha/2)` |
//!
//! Critical damping `A^2 = 4B` gives the closed-form optimal lookahead of
//! [`sigma_star_formula`].

use alloc::vec::Vec;

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum OdeVariant {
    /// Forward differences for both `x'` and `v'`.
    Ode1,
    /// Backward difference for `v'`.
    Ode2,
    /// Midpoint velocity `(m_i + m_{i-1}) / 2`.
    Ode3,
}

impl OdeVariant {
    pub const ALL: [OdeVariant; 3] = [OdeVariant::Ode1, OdeVariant::Ode2, OdeVariant::Ode3];

    pub fn name(self) -> &'static str {
        match self {
            OdeVariant::Ode1 => "ode1",
            OdeVariant::Ode2 => "ode2",
            OdeVariant::Ode3 => "ode3",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OdeCoeffs {
    /// Damping coefficient.
    pub a: f64,
    /// Stiffness.
    pub b: f64,
    /// `None` for hand-built coefficient sets.
    pub variant: Option<OdeVariant>,
    pub valid: bool,
}

impl OdeCoeffs {
    /// Coefficients of `x'' + a x' + b x = 0`; valid when `a >= 0` and `b > 0`.
    pub fn new(a: f64, b: f64) -> Self {
        Self {
            a,
            b,
            variant: None,
            valid: a >= 0.0 && b > 0.0 && a.is_finite() && b.is_finite(),
        }
    }

    /// `A^2 - 4B`: negative underdamped, zero critical, positive overdamped.
    pub fn discriminant(&self) -> f64 {
        self.a * self.a - 4.0 * self.b
    }
}

/// Surrogate coefficients for `alpha = g - k_eta sigma - 1`.
///
/// Invalid (`valid = false`) when the variant's denominator `1 + alpha`
/// (ode2) or `1 + alpha/2` (ode3) is not positive, or `k_eta <= 0`.
pub fn ode_coeffs(variant: OdeVariant, alpha: f64, k_eta: f64) -> OdeCoeffs {
    let denom = match variant {
        OdeVariant::Ode1 => 1.0,
        OdeVariant::Ode2 => 1.0 + alpha,
        OdeVariant::Ode3 => 1.0 + alpha / 2.0,
    };
    let (a, b) = (-alpha / denom, k_eta / denom);
    OdeCoeffs {
        a,
        b,
        variant: Some(variant),
        valid: denom > 0.0 && k_eta > 0.0 && a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Regime {
    Underdamped,
    Critical,
    Overdamped,
}

/// Relative tolerance on `B - A^2/4` for calling a system critical.
pub const CRITICAL_TOL: f64 = 1e-12;

/// Closed-form solution for given initial position and velocity.
///
/// - underdamped: `x = e^{-At/2} (c1 cos wt + c2 sin wt)`, `w = sqrt(B - A^2/4)`
/// - critical: `x = e^{-At/2} (c1 + c2 t)`
/// - overdamped: `x = c1 e^{-rate_fast t} + c2 e^{-rate_slow t}`
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OscillatorSolution {
    pub regime: Regime,
    pub a: f64,
    /// Oscillation frequency; zero outside the underdamped regime.
    pub omega: f64,
    /// `A/2 + sqrt(A^2/4 - B)` when overdamped, else `A/2`.
    pub rate_fast: f64,
    /// `A/2 - sqrt(A^2/4 - B)` when overdamped, else `A/2`.
    pub rate_slow: f64,
    pub c1: f64,
    pub c2: f64,
    /// `2/A`, or `1/rate_fast` when overdamped.
    pub timescale_initial: f64,
}

impl OscillatorSolution {
    pub fn position(&self, t: f64) -> f64 {
        match self.regime {
            Regime::Underdamped => {
                let env = libm::exp(-0.5 * self.a * t);
                env * (self.c1 * libm::cos(self.omega * t) + self.c2 * libm::sin(self.omega * t))
            }
            Regime::Critical => libm::exp(-0.5 * self.a * t) * (self.c1 + self.c2 * t),
            Regime::Overdamped => {
                self.c1 * libm::exp(-self.rate_fast * t) + self.c2 * libm::exp(-self.rate_slow * t)
            }
        }
    }

    pub fn velocity(&self, t: f64) -> f64 {
        let h = 0.5 * self.a;
        match self.regime {
            Regime::Underdamped => {
                let (s, c) = (libm::sin(self.omega * t), libm::cos(self.omega * t));
                let env = libm::exp(-h * t);
                env * ((self.c2 * self.omega - h * self.c1) * c - (self.c1 * self.omega + h * self.c2) * s)
            }
            Regime::Critical => libm::exp(-h * t) * (self.c2 - h * (self.c1 + self.c2 * t)),
            Regime::Overdamped => {
                -self.rate_fast * self.c1 * libm::exp(-self.rate_fast * t)
                    - self.rate_slow * self.c2 * libm::exp(-self.rate_slow * t)
            }
        }
    }
}

pub fn solve_closed_form(coeffs: &OdeCoeffs, x0: f64, v0: f64) -> Result<OscillatorSolution> {
    if !coeffs.valid {
        return Err(invalid("oscillator coefficients are not in the damped regime"));
    }
    let (a, b) = (coeffs.a, coeffs.b);
    let h = 0.5 * a;
    let disc = b - h * h;
    let scale = b.max(h * h);
    let regime = if disc.abs() <= CRITICAL_TOL * scale {
        Regime::Critical
    } else if disc > 0.0 {
        Regime::Underdamped
    } else {
        Regime::Overdamped
    };
    let sol = match regime {
        Regime::Underdamped => {
            let omega = libm::sqrt(disc);
            OscillatorSolution {
                regime,
                a,
                omega,
                rate_fast: h,
                rate_slow: h,
                c1: x0,
                c2: (v0 + h * x0) / omega,
                timescale_initial: 2.0 / a,
            }
        }
        Regime::Critical => OscillatorSolution {
            regime,
            a,
            omega: 0.0,
            rate_fast: h,
            rate_slow: h,
            c1: x0,
            c2: v0 + h * x0,
            timescale_initial: 2.0 / a,
        },
        Regime::Overdamped => {
            let w = libm::sqrt(-disc);
            let (fast, slow) = (h + w, h - w);
            OscillatorSolution {
                regime,
                a,
                omega: 0.0,
                rate_fast: fast,
                rate_slow: slow,
                c1: (-v0 - slow * x0) / (fast - slow),
                c2: (v0 + fast * x0) / (fast - slow),
                timescale_initial: 1.0 / fast,
            }
        }
    };
    Ok(sol)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OdeSample {
    pub t: f64,
    pub x: f64,
    pub v: f64,
}

pub const DEFAULT_DT: f64 = 0.01;

/// Classical RK4 on `(x, v)`, sampled at `t = 0, 1, 2, ..., floor(t_end)`.
///
/// Each unit interval is split into `ceil(1/dt)` equal substeps so samples
/// land exactly on integer times, matching iteration counts.
pub fn integrate_ode(coeffs: &OdeCoeffs, x0: f64, v0: f64, t_end: f64, dt: f64) -> Result<Vec<OdeSample>> {
    if !coeffs.valid {
        return Err(invalid("oscillator coefficients are not in the damped regime"));
    }
    if !(dt > 0.0 && dt <= 1.0) {
        return Err(invalid("dt must lie in (0, 1]"));
    }
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(invalid("t_end must be positive"));
    }
    let (a, b) = (coeffs.a, coeffs.b);
    let accel = |x: f64, v: f64| -a * v - b * x;
    let substeps = libm::ceil(1.0 / dt - 1e-9).max(1.0) as usize;
    let h = 1.0 / substeps as f64;
    let n_samples = libm::floor(t_end) as usize;

    let (mut x, mut v) = (x0, v0);
    let mut out = Vec::with_capacity(n_samples + 1);
    out.push(OdeSample { t: 0.0, x, v });
    for unit in 1..=n_samples {
        for _ in 0..substeps {
            let (k1x, k1v) = (v, accel(x, v));
            let (k2x, k2v) = (v + 0.5 * h * k1v, accel(x + 0.5 * h * k1x, v + 0.5 * h * k1v));
            let (k3x, k3v) = (v + 0.5 * h * k2v, accel(x + 0.5 * h * k2x, v + 0.5 * h * k2v));
            let (k4x, k4v) = (v + h * k3v, accel(x + h * k3x, v + h * k3v));
            x += h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
            v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        }
        out.push(OdeSample { t: unit as f64, x, v });
    }
    Ok(out)
}

/// Closed-form critical-damping lookahead for each surrogate. Negative values
/// mean super-acceleration brings no benefit at this `k_eta`.
pub fn sigma_star_formula(variant: OdeVariant, k_eta: f64, g: f64) -> Result<f64> {
    if !(k_eta > 0.0 && k_eta.is_finite()) {
        return Err(invalid("k_eta must be positive"));
    }
    let drag = (1.0 - g) / k_eta;
    let s = match variant {
        OdeVariant::Ode1 => 2.0 / libm::sqrt(k_eta) - drag,
        OdeVariant::Ode2 => -2.0 + 2.0 * libm::sqrt(1.0 + 1.0 / k_eta) - drag,
        OdeVariant::Ode3 => -1.0 + libm::sqrt(1.0 + 4.0 / k_eta) - drag,
    };
    Ok(s)
}

/// Initial velocity used when an ODE path is overlaid on a discrete run
/// started from rest (`m = 0`) at `theta0` on `k theta^2 / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum InitialVelocity {
    Zero,
    /// The first momentum step, `-eta grad L(theta0)`.
    FirstStep,
    /// Average of the accumulator before and after the first step,
    /// `-eta grad L(theta0) / 2`; matches reading `x'` as the mean of
    /// consecutive momenta.
    #[default]
    Midpoint,
    Value(f64),
}

impl InitialVelocity {
    pub fn resolve(self, k_eta: f64, theta0: f64) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::FirstStep => -k_eta * theta0,
            Self::Midpoint => -0.5 * k_eta * theta0,
            Self::Value(v) => v,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OverlayDeviation {
    pub variant: OdeVariant,
    pub coeffs: OdeCoeffs,
    /// RMS of `x(i) - theta_i` over `i = 0..=steps`; `+inf` when the
    /// coefficients leave the damped regime and no path exists.
    pub rms: f64,
    pub path: Option<Vec<OdeSample>>,
}

/// Integrates each surrogate alongside the discrete parabola recursion and
/// reports how far each path strays from the iterates.
pub fn overlay_parabola(
    k_eta: f64,
    g: f64,
    sigma: f64,
    theta0: f64,
    steps: usize,
    v0: InitialVelocity,
) -> Result<(Vec<f64>, Vec<OverlayDeviation>)> {
    if steps == 0 {
        return Err(invalid("steps must be positive"));
    }
    let discrete = crate::optim::alpha_form_parabola(k_eta, g, sigma, theta0, steps);
    let alpha = crate::optim::alpha_of(g, k_eta, sigma);
    let v = v0.resolve(k_eta, theta0);
    let out = OdeVariant::ALL
        .iter()
        .map(|&variant| {
            let coeffs = ode_coeffs(variant, alpha, k_eta);
            let path = integrate_ode(&coeffs, theta0, v, steps as f64, DEFAULT_DT).ok();
            let rms = path.as_ref().map_or(f64::INFINITY, |p| {
                let sq: f64 = p.iter().zip(&discrete).map(|(s, d)| (s.x - d) * (s.x - d)).sum();
                libm::sqrt(sq / discrete.len() as f64)
            });
            OverlayDeviation {
                variant,
                coeffs,
                rms,
                path,
            }
        })
        .collect();
    Ok((discrete, out))
}

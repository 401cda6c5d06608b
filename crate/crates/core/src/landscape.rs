//! Objective functions with hand-coded gradients.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_dim, invalid, Error, Result};
use crate::linalg::{jacobi_eigen, sup_norm, Matrix};
use crate::rng::SeededRng;

/// A differentiable scalar objective on `R^dim`.
///
/// Implementations may assume slices have length [`Landscape::dim`]; use the
/// `try_*` methods when the caller cannot guarantee it.
pub trait Landscape {
    fn dim(&self) -> usize;

    fn value(&self, theta: &[f64]) -> f64;

    /// Writes the gradient at `theta` into `out`.
    fn gradient(&self, theta: &[f64], out: &mut [f64]);

    /// Known or numerically located minimizer, used as the reference point for
    /// distance-to-minimum curves.
    fn minimum_hint(&self) -> Option<&[f64]> {
        None
    }

    fn try_value(&self, theta: &[f64]) -> Result<f64> {
        check_dim(self.dim(), theta.len())?;
        Ok(self.value(theta))
    }

    fn try_gradient(&self, theta: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), theta.len())?;
        let mut out = vec![0.0; self.dim()];
        self.gradient(theta, &mut out);
        Ok(out)
    }
}

impl<L: Landscape + ?Sized> Landscape for &L {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, theta: &[f64]) -> f64 {
        (**self).value(theta)
    }
    fn gradient(&self, theta: &[f64], out: &mut [f64]) {
        (**self).gradient(theta, out)
    }
    fn minimum_hint(&self) -> Option<&[f64]> {
        (**self).minimum_hint()
    }
}

/// `L(theta) = k theta^2 / 2` in one dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Parabola {
    k: f64,
    minimum: [f64; 1],
}

impl Parabola {
    pub fn new(k: f64) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(invalid("parabola curvature k must be positive and finite"));
        }
        Ok(Self { k, minimum: [0.0] })
    }

    pub fn k(&self) -> f64 {
        self.k
    }
}

pub fn parabola(k: f64) -> Result<Parabola> {
    Parabola::new(k)
}

impl Landscape for Parabola {
    fn dim(&self) -> usize {
        1
    }
    fn value(&self, theta: &[f64]) -> f64 {
        0.5 * self.k * theta[0] * theta[0]
    }
    fn gradient(&self, theta: &[f64], out: &mut [f64]) {
        out[0] = self.k * theta[0];
    }
    fn minimum_hint(&self) -> Option<&[f64]> {
        Some(&self.minimum)
    }
}

/// Two-parameter nonconvex valley:
/// `(t1^2 + 2 t2 - 7)^2 + (2 t1 + t2 - 5)^2 + 1e-3 (t1^6 + t2^6)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Synth2d {
    minimum: [f64; 2],
}

/// Start point used to locate the valley minimum.
pub const SYNTH2D_LOCATE_START: [f64; 2] = [1.0, 2.0];

impl Synth2d {
    /// Builds the landscape and locates its minimum from (1, 2) to a gradient
    /// sup-norm below 1e-10.
    pub fn new() -> Result<Self> {
        let bare = Synth2dRaw;
        let min = locate_minimum(&bare, &SYNTH2D_LOCATE_START, 1e-10)?;
        Ok(Self {
            minimum: [min[0], min[1]],
        })
    }
}

pub fn synth2d() -> Result<Synth2d> {
    Synth2d::new()
}

/// The synth2d objective without a minimum hint.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Synth2dRaw;

impl Landscape for Synth2dRaw {
    fn dim(&self) -> usize {
        2
    }

    fn value(&self, theta: &[f64]) -> f64 {
        let (a, b) = (theta[0], theta[1]);
        let r1 = a * a + 2.0 * b - 7.0;
        let r2 = 2.0 * a + b - 5.0;
        let a3 = a * a * a;
        let b3 = b * b * b;
        r1 * r1 + r2 * r2 + 1e-3 * (a3 * a3 + b3 * b3)
    }

    fn gradient(&self, theta: &[f64], out: &mut [f64]) {
        let (a, b) = (theta[0], theta[1]);
        let r1 = a * a + 2.0 * b - 7.0;
        let r2 = 2.0 * a + b - 5.0;
        let a2 = a * a;
        let b2 = b * b;
        out[0] = 4.0 * a * r1 + 4.0 * r2 + 6e-3 * a2 * a2 * a;
        out[1] = 4.0 * r1 + 2.0 * r2 + 6e-3 * b2 * b2 * b;
    }
}

impl Landscape for Synth2d {
    fn dim(&self) -> usize {
        2
    }
    fn value(&self, theta: &[f64]) -> f64 {
        Synth2dRaw.value(theta)
    }
    fn gradient(&self, theta: &[f64], out: &mut [f64]) {
        Synth2dRaw.gradient(theta, out)
    }
    fn minimum_hint(&self) -> Option<&[f64]> {
        Some(&self.minimum)
    }
}

pub const LOCATE_MAX_ITER: usize = 1_000_000;

/// Gradient descent with step halving on loss increase, until the gradient
/// sup-norm drops below `tol`.
///
/// Near the minimum the loss stops resolving progress in floating point, so a
/// trial step whose loss is equal up to rounding is still accepted when it
/// shrinks the gradient.
pub fn locate_minimum<L: Landscape + ?Sized>(landscape: &L, start: &[f64], tol: f64) -> Result<Vec<f64>> {
    locate_minimum_with_cap(landscape, start, tol, LOCATE_MAX_ITER)
}

pub fn locate_minimum_with_cap<L: Landscape + ?Sized>(
    landscape: &L,
    start: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<Vec<f64>> {
    if !(tol > 0.0) {
        return Err(invalid("tolerance must be positive"));
    }
    check_dim(landscape.dim(), start.len())?;
    let n = start.len();
    let mut x = start.to_vec();
    let mut g = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut g_trial = vec![0.0; n];
    landscape.gradient(&x, &mut g);
    let mut f = landscape.value(&x);
    let mut gnorm = sup_norm(&g);
    if !f.is_finite() || !gnorm.is_finite() {
        return Err(invalid("landscape not finite at start point"));
    }
    let mut step = 1e-2;

    for _ in 0..max_iter {
        if gnorm < tol {
            return Ok(x);
        }
        for i in 0..n {
            trial[i] = x[i] - step * g[i];
        }
        let f_trial = landscape.value(&trial);
        landscape.gradient(&trial, &mut g_trial);
        let g_trial_norm = sup_norm(&g_trial);
        let rounding = 64.0 * f64::EPSILON * f.abs().max(f64::MIN_POSITIVE);
        let accept = f_trial.is_finite()
            && g_trial_norm.is_finite()
            && (f_trial < f || (f_trial <= f + rounding && l2(&g_trial) < l2(&g)));
        if accept {
            core::mem::swap(&mut x, &mut trial);
            core::mem::swap(&mut g, &mut g_trial);
            f = f_trial;
            gnorm = g_trial_norm;
            step *= 1.2;
        } else {
            step *= 0.5;
            if step == 0.0 {
                break;
            }
        }
    }
    if gnorm < tol {
        return Ok(x);
    }
    Err(Error::NonConvergence { iterations: max_iter })
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// Central-difference gradient `(f(x + h e_j) - f(x - h e_j)) / 2h`.
pub fn finite_diff_gradient<L: Landscape + ?Sized>(landscape: &L, point: &[f64], h: f64) -> Result<Vec<f64>> {
    if !(h > 0.0) {
        return Err(invalid("finite-difference step must be positive"));
    }
    check_dim(landscape.dim(), point.len())?;
    let mut probe = point.to_vec();
    let mut out = Vec::with_capacity(point.len());
    for j in 0..point.len() {
        probe[j] = point[j] + h;
        let up = landscape.value(&probe);
        probe[j] = point[j] - h;
        let down = landscape.value(&probe);
        probe[j] = point[j];
        out.push((up - down) / (2.0 * h));
    }
    Ok(out)
}

pub const DEFAULT_FD_STEP: f64 = 1e-6;

/// Synthetic regression data: features uniform in (0, 1) and noiseless
/// targets `y = sum_a (x_a / n_features)^3`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LinRegDataset {
    n_features: usize,
    n_data: usize,
    features: Vec<f64>,
    targets: Vec<f64>,
    seed: Option<u64>,
}

pub fn cubic_target(row: &[f64]) -> f64 {
    let nf = row.len() as f64;
    row.iter()
        .map(|x| {
            let s = x / nf;
            s * s * s
        })
        .sum()
}

impl LinRegDataset {
    pub fn synthesize(n_features: usize, n_data: usize, seed: u64) -> Result<Self> {
        if n_features == 0 || n_data == 0 {
            return Err(invalid("dataset needs at least one feature and one datum"));
        }
        let mut rng = SeededRng::new(seed);
        let features: Vec<f64> = (0..n_features * n_data).map(|_| rng.uniform_open()).collect();
        let targets = features.chunks_exact(n_features).map(cubic_target).collect();
        Ok(Self {
            n_features,
            n_data,
            features,
            targets,
            seed: Some(seed),
        })
    }

    /// Builds a dataset from explicit rows (row-major) and targets.
    pub fn from_parts(n_features: usize, features: Vec<f64>, targets: Vec<f64>) -> Result<Self> {
        if n_features == 0 || targets.is_empty() {
            return Err(invalid("dataset needs at least one feature and one datum"));
        }
        check_dim(n_features * targets.len(), features.len())?;
        Ok(Self {
            n_features,
            n_data: targets.len(),
            features,
            targets,
            seed: None,
        })
    }

    /// Builds a dataset from explicit rows with targets from the cubic rule.
    pub fn from_features(n_features: usize, features: Vec<f64>) -> Result<Self> {
        if n_features == 0 || features.is_empty() || !features.len().is_multiple_of(n_features) {
            return Err(invalid("feature buffer must hold whole rows"));
        }
        let targets = features.chunks_exact(n_features).map(cubic_target).collect();
        Self::from_parts(n_features, features, targets)
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }
    pub fn n_data(&self) -> usize {
        self.n_data
    }
    pub fn seed(&self) -> Option<u64> {
        self.seed
    }
    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.n_features..(i + 1) * self.n_features]
    }
    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.features.chunks_exact(self.n_features)
    }
    pub fn targets(&self) -> &[f64] {
        &self.targets
    }
}

pub fn make_linreg_dataset(n_features: usize, n_data: usize, seed: u64) -> Result<LinRegDataset> {
    LinRegDataset::synthesize(n_features, n_data, seed)
}

/// Mean squared error of the affine model `theta_0 + sum_a theta_a x_a`.
#[derive(Debug, Clone, Copy)]
pub struct LinReg<'a> {
    data: &'a LinRegDataset,
}

pub fn linreg_landscape(dataset: &LinRegDataset) -> LinReg<'_> {
    LinReg { data: dataset }
}

impl LinReg<'_> {
    fn residual(&self, theta: &[f64], i: usize) -> f64 {
        let row = self.data.row(i);
        let pred: f64 = theta[0] + row.iter().zip(&theta[1..]).map(|(x, t)| x * t).sum::<f64>();
        self.data.targets[i] - pred
    }
}

impl Landscape for LinReg<'_> {
    fn dim(&self) -> usize {
        1 + self.data.n_features
    }

    fn value(&self, theta: &[f64]) -> f64 {
        let n = self.data.n_data;
        (0..n)
            .map(|i| {
                let r = self.residual(theta, i);
                r * r
            })
            .sum::<f64>()
            / n as f64
    }

    fn gradient(&self, theta: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for i in 0..self.data.n_data {
            let r = self.residual(theta, i);
            out[0] += r;
            for (o, x) in out[1..].iter_mut().zip(self.data.row(i)) {
                *o += r * x;
            }
        }
        let scale = -2.0 / self.data.n_data as f64;
        out.iter_mut().for_each(|o| *o *= scale);
    }
}

/// The constant Hessian `2 E[(1, x)(1, x)^T]` of the regression loss.
pub fn linreg_hessian(dataset: &LinRegDataset) -> Matrix {
    let d = 1 + dataset.n_features;
    let mut h = Matrix::zeros(d);
    let mut aug = vec![1.0; d];
    for row in dataset.rows() {
        aug[1..].copy_from_slice(row);
        for i in 0..d {
            for j in i..d {
                h.set(i, j, h.get(i, j) + aug[i] * aug[j]);
            }
        }
    }
    let scale = 2.0 / dataset.n_data as f64;
    for i in 0..d {
        for j in i..d {
            let v = h.get(i, j) * scale;
            h.set(i, j, v);
            h.set(j, i, v);
        }
    }
    h
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SpectrumReport {
    /// Hessian eigenvalues, ascending. In the `k theta^2 / 2` convention each
    /// eigenvalue is the curvature of its eigen-direction.
    pub eigenvalues: Vec<f64>,
    pub kappa_min: f64,
    pub kappa_max: f64,
    #[cfg_attr(feature = "serde", serde(skip))]
    pub eigenvectors: Vec<Vec<f64>>,
}

pub const JACOBI_OFF_DIAGONAL_TOL: f64 = 1e-12;

pub fn linreg_hessian_spectrum(dataset: &LinRegDataset) -> Result<SpectrumReport> {
    let h = linreg_hessian(dataset);
    let eig = jacobi_eigen(&h, JACOBI_OFF_DIAGONAL_TOL, 100)?;
    Ok(SpectrumReport {
        kappa_min: eig.values[0],
        kappa_max: *eig.values.last().expect("non-empty spectrum"),
        eigenvalues: eig.values,
        eigenvectors: eig.vectors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parabola_values() {
        let p = parabola(2.0).unwrap();
        assert_eq!(p.value(&[3.0]), 9.0);
        assert_eq!(p.try_gradient(&[3.0]).unwrap(), vec![6.0]);
        let p = parabola(1.0).unwrap();
        assert_eq!(p.value(&[0.0]), 0.0);
        assert_eq!(p.try_gradient(&[0.0]).unwrap(), vec![0.0]);
        assert_eq!(p.value(&[1.0]), 0.5);
        assert_eq!(p.try_gradient(&[1.0]).unwrap(), vec![1.0]);
        assert_eq!(p.minimum_hint(), Some(&[0.0][..]));
    }

    #[test]
    fn parabola_rejects_bad_curvature() {
        assert!(parabola(0.0).is_err());
        assert!(parabola(-1.0).is_err());
        assert!(parabola(f64::NAN).is_err());
    }

    #[test]
    fn synth2d_at_origin() {
        assert_eq!(Synth2dRaw.value(&[0.0, 0.0]), 74.0);
        assert_eq!(Synth2dRaw.try_gradient(&[0.0, 0.0]).unwrap(), vec![-20.0, -38.0]);
    }

    #[test]
    fn synth2d_minimum() {
        let s = synth2d().unwrap();
        let m = s.minimum_hint().unwrap();
        assert!((m[0] - 1.690).abs() < 5e-4, "{m:?}");
        assert!((m[1] - 1.963).abs() < 5e-4, "{m:?}");
        assert!(sup_norm(&s.try_gradient(m).unwrap()) < 1e-10);
    }

    #[test]
    fn locate_parabola_minimum() {
        let p = parabola(5.0).unwrap();
        let x = locate_minimum(&p, &[3.0], 1e-10).unwrap();
        assert!(x[0].abs() < 1e-10);
    }

    #[test]
    fn locate_reports_iteration_cap() {
        let x = locate_minimum_with_cap(&Synth2dRaw, &[-1.0, -3.8], 1e-10, 3);
        assert!(matches!(x, Err(Error::NonConvergence { iterations: 3 })));
    }

    #[test]
    fn finite_diff_parabola() {
        let p = parabola(1.0).unwrap();
        let g = finite_diff_gradient(&p, &[1.0], 1e-5).unwrap();
        assert!((g[0] - 1.0).abs() < 1e-9);
        assert!(finite_diff_gradient(&p, &[1.0], 0.0).is_err());
    }

    #[test]
    fn finite_diff_synth2d_origin() {
        let g = finite_diff_gradient(&Synth2dRaw, &[0.0, 0.0], 1e-6).unwrap();
        assert!((g[0] + 20.0).abs() < 1e-5);
        assert!((g[1] + 38.0).abs() < 1e-5);
    }

    #[test]
    fn dataset_shape_and_bounds() {
        let d = make_linreg_dataset(50, 1000, 11).unwrap();
        assert_eq!(d.n_data(), 1000);
        assert_eq!(d.rows().count(), 1000);
        assert!(d.rows().all(|r| r.len() == 50 && r.iter().all(|&x| x > 0.0 && x < 1.0)));
        let bound = 50.0 * (1.0f64 / 50.0).powi(3);
        assert!(d.targets().iter().all(|&y| (0.0..=bound).contains(&y)));
        for (row, &y) in d.rows().zip(d.targets()) {
            let want: f64 = row.iter().map(|x| (x / 50.0).powi(3)).sum();
            assert!((y - want).abs() <= 1e-15 * want);
        }
    }

    #[test]
    fn dataset_is_deterministic() {
        let a = make_linreg_dataset(5, 20, 99).unwrap();
        let b = make_linreg_dataset(5, 20, 99).unwrap();
        assert_eq!(a, b);
        let c = make_linreg_dataset(5, 20, 100).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn linreg_single_datum() {
        let d = LinRegDataset::from_features(1, vec![0.5]).unwrap();
        let y = d.targets()[0];
        assert_eq!(y, 0.125);
        let l = linreg_landscape(&d);
        assert_eq!(l.value(&[0.0, 0.0]), y * y);
        let g = l.try_gradient(&[0.0, 0.0]).unwrap();
        assert_eq!(g[0], -2.0 * y);
    }

    #[test]
    fn linreg_doubling_targets() {
        let d = make_linreg_dataset(3, 40, 5).unwrap();
        let doubled: Vec<f64> = d.targets().iter().map(|y| 2.0 * y).collect();
        let flat: Vec<f64> = d.rows().flatten().copied().collect();
        let d2 = LinRegDataset::from_parts(3, flat, doubled).unwrap();
        let v1 = linreg_landscape(&d).value(&[0.0; 4]);
        let v2 = linreg_landscape(&d2).value(&[0.0; 4]);
        assert!((v2 - 4.0 * v1).abs() <= 1e-15 * v2);
    }

    #[test]
    fn linreg_dimension_mismatch() {
        let d = make_linreg_dataset(3, 4, 5).unwrap();
        let l = linreg_landscape(&d);
        assert_eq!(
            l.try_value(&[0.0; 3]),
            Err(Error::DimensionMismatch { expected: 4, actual: 3 })
        );
    }

    #[test]
    fn spectrum_constant_feature() {
        let c = 0.3;
        let d = LinRegDataset::from_features(1, vec![c; 7]).unwrap();
        let s = linreg_hessian_spectrum(&d).unwrap();
        assert!(s.eigenvalues[0].abs() < 1e-12);
        assert!((s.eigenvalues[1] - 2.0 * (1.0 + c * c)).abs() < 1e-12);
    }

    #[test]
    fn spectrum_trace() {
        let d = make_linreg_dataset(10, 200, 1).unwrap();
        let h = linreg_hessian(&d);
        let s = linreg_hessian_spectrum(&d).unwrap();
        assert_eq!(s.eigenvalues.len(), 11);
        let sum: f64 = s.eigenvalues.iter().sum();
        assert!((sum - h.trace()).abs() < 1e-10 * h.trace());
        assert!(s.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }
}

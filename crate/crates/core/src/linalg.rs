//! Dense linear algebra needed by the toolkit: cyclic Jacobi eigensolver for
//! symmetric matrices and a small pivoted linear solve.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Result};

/// Square matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn from_rows(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(invalid("matrix data length must be n*n"));
        }
        Ok(Self { n, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let row = &self.data[i * self.n..(i + 1) * self.n];
                row.iter().zip(v).map(|(a, b)| a * b).sum()
            })
            .collect()
    }

    fn max_off_diagonal(&self) -> f64 {
        let mut m = 0.0f64;
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j {
                    m = m.max(self.get(i, j).abs());
                }
            }
        }
        m
    }
}

/// Eigenvalues (ascending) with matching unit eigenvectors.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    /// `vectors[k]` is the eigenvector for `values[k]`.
    pub vectors: Vec<Vec<f64>>,
    pub sweeps: usize,
}

/// Cyclic Jacobi rotations until the off-diagonal sup-norm drops below `tol`.
///
/// The input must be symmetric; only that property is assumed, not definiteness.
pub fn jacobi_eigen(matrix: &Matrix, tol: f64, max_sweeps: usize) -> Result<SymmetricEigen> {
    let n = matrix.n;
    let mut a = matrix.clone();
    let mut v = Matrix::zeros(n);
    for i in 0..n {
        v.set(i, i, 1.0);
    }

    let mut sweeps = 0;
    while a.max_off_diagonal() >= tol {
        if sweeps == max_sweeps {
            return Err(crate::Error::NonConvergence { iterations: sweeps });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let app = a.get(p, p);
                let aqq = a.get(q, q);
                // tan of the rotation angle, smaller root for stability
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + libm::sqrt(1.0 + theta * theta))
                } else {
                    -1.0 / (-theta + libm::sqrt(1.0 + theta * theta))
                };
                let c = 1.0 / libm::sqrt(1.0 + t * t);
                let s = t * c;

                for k in 0..n {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, c * akp - s * akq);
                    a.set(k, q, s * akp + c * akq);
                }
                for k in 0..n {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, c * apk - s * aqk);
                    a.set(q, k, s * apk + c * aqk);
                }
                a.set(p, q, 0.0);
                a.set(q, p, 0.0);

                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a.get(i, i).total_cmp(&a.get(j, j)));
    let values = order.iter().map(|&i| a.get(i, i)).collect();
    let vectors = order
        .iter()
        .map(|&j| (0..n).map(|k| v.get(k, j)).collect())
        .collect();
    Ok(SymmetricEigen {
        values,
        vectors,
        sweeps,
    })
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
///
/// Returns `None` when a pivot vanishes (singular to working precision).
pub fn solve(mut a: Matrix, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = a.n;
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a.get(i, col).abs().total_cmp(&a.get(j, col).abs()))?;
        if a.get(pivot, col) == 0.0 || !a.get(pivot, col).is_finite() {
            return None;
        }
        if pivot != col {
            for k in 0..n {
                let tmp = a.get(col, k);
                a.set(col, k, a.get(pivot, k));
                a.set(pivot, k, tmp);
            }
            b.swap(col, pivot);
        }
        let d = a.get(col, col);
        for row in (col + 1)..n {
            let f = a.get(row, col) / d;
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a.set(row, k, a.get(row, k) - f * a.get(col, k));
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in (row + 1)..n {
            acc -= a.get(row, k) * x[k];
        }
        x[row] = acc / a.get(row, row);
    }
    Some(x)
}

pub fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

pub fn euclidean_distance(a: &[f64], b: &[f64]) -> f64 {
    libm::sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_two_by_two() {
        let m = Matrix::from_rows(2, vec![2.0, 1.0, 1.0, 2.0]).unwrap();
        let e = jacobi_eigen(&m, 1e-14, 50).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-14);
        assert!((e.values[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn jacobi_diagonal_is_noop() {
        let m = Matrix::from_rows(3, vec![3.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 2.0]).unwrap();
        let e = jacobi_eigen(&m, 1e-12, 10).unwrap();
        assert_eq!(e.sweeps, 0);
        assert_eq!(e.values, vec![-1.0, 2.0, 3.0]);
    }

    #[test]
    fn solve_small_system() {
        let a = Matrix::from_rows(3, vec![0.0, 2.0, 1.0, 1.0, 1.0, 1.0, 2.0, 1.0, 3.0]).unwrap();
        let x = solve(a, vec![7.0, 6.0, 13.0]).unwrap();
        for (got, want) in x.iter().zip([1.0, 2.0, 3.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn solve_singular() {
        let a = Matrix::from_rows(2, vec![1.0, 2.0, 2.0, 4.0]).unwrap();
        assert!(solve(a, vec![1.0, 2.0]).is_none());
    }
}

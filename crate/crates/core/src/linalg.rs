//! Dense symmetric eigen helpers on top of `nalgebra`.
//!
//! `nalgebra`'s symmetric solver (Householder tridiagonalisation followed by
//! implicit QR) is single-threaded and performs a fixed sequence of floating
//! point operations for a given input, so every decomposition here is
//! bit-for-bit reproducible across runs and thread counts.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 10_000;

/// Eigenpairs sorted by ascending eigenvalue.
#[derive(Debug, Clone)]
pub struct SortedEigen {
    pub values: Vec<f64>,
    /// Column `k` is the unit eigenvector for `values[k]`.
    pub vectors: DMatrix<f64>,
}

impl SortedEigen {
    pub fn vector(&self, k: usize) -> DVector<f64> {
        self.vectors.column(k).into_owned()
    }

    pub fn min(&self) -> (f64, DVector<f64>) {
        (self.values[0], self.vector(0))
    }

    pub fn max(&self) -> (f64, DVector<f64>) {
        let k = self.values.len() - 1;
        (self.values[k], self.vector(k))
    }
}

pub fn symmetric_eigen(m: &DMatrix<f64>) -> Result<SortedEigen> {
    let n = m.nrows();
    debug_assert_eq!(n, m.ncols());
    if n == 0 {
        return Ok(SortedEigen { values: Vec::new(), vectors: DMatrix::zeros(0, 0) });
    }
    let eig = SymmetricEigen::try_new(m.clone(), f64::EPSILON, MAX_SWEEPS)
        .ok_or(Error::EigenNoConvergence(n))?;

    let mut order: Vec<usize> = (0..n).collect();
    // total_cmp keeps the ordering deterministic even for equal eigenvalues
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));

    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = eig.eigenvectors.column(src).into_owned();
        canonical_sign(&mut col);
        vectors.set_column(dst, &col);
    }
    Ok(SortedEigen { values, vectors })
}

/// Flip so that the largest-magnitude component is positive.
fn canonical_sign(v: &mut DVector<f64>) {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i].abs() > v[best].abs() {
            best = i;
        }
    }
    if v.len() > 0 && v[best] < 0.0 {
        v.neg_mut();
    }
}

/// Orthonormal Helmert basis of the mean-zero subspace of R^n, as an
/// `n x (n-1)` matrix.
pub fn helmert_basis(n: usize) -> DMatrix<f64> {
    let mut v = DMatrix::zeros(n, n.saturating_sub(1));
    for k in 1..n {
        let scale = 1.0 / ((k * (k + 1)) as f64).sqrt();
        for i in 0..k {
            v[(i, k - 1)] = scale;
        }
        v[(k, k - 1)] = -(k as f64) * scale;
    }
    v
}

pub fn quadratic_form(m: &DMatrix<f64>, c: &[f64]) -> f64 {
    let n = c.len();
    let mut total = 0.0;
    for i in 0..n {
        let mut row = 0.0;
        for j in 0..n {
            row += m[(i, j)] * c[j];
        }
        total += c[i] * row;
    }
    total
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

pub fn euclidean_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    euclidean_sq(a, b).sqrt()
}

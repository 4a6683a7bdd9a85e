//! Kernel matrices over finite point sets and the algebra relating positive
//! and negative definite kernels.
//!
//! Definiteness is decided numerically in [`definiteness`]; every failing
//! verdict carries a certificate vector whose quadratic form can be checked
//! without trusting the eigensolver (see [`witness_validate`]).

mod definiteness;
mod function;

pub use definiteness::{
    default_tolerance, is_negative_definite, is_positive_definite, pd_witness_validate,
    witness_validate, DefinitenessKind, DefinitenessVerdict, WitnessVerdict,
};
pub use function::{
    function_transforms, kernel_from_function, FunctionTransform, InvariantFunctionTable, TransformedFunction,
};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spaces::PointSet;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct KernelMatrixJson {
    labels: Vec<String>,
    matrix: Vec<Vec<f64>>,
}

/// Labelled, exactly symmetric, finite square matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "KernelMatrixJson", into = "KernelMatrixJson")]
pub struct KernelMatrix {
    labels: Vec<String>,
    entries: DMatrix<f64>,
}

impl TryFrom<KernelMatrixJson> for KernelMatrix {
    type Error = Error;

    fn try_from(raw: KernelMatrixJson) -> Result<Self> {
        KernelMatrix::from_rows(raw.labels, &raw.matrix)
    }
}

impl From<KernelMatrix> for KernelMatrixJson {
    fn from(k: KernelMatrix) -> Self {
        KernelMatrixJson { matrix: k.rows(), labels: k.labels }
    }
}

impl KernelMatrix {
    pub fn new(labels: Vec<String>, entries: DMatrix<f64>) -> Result<Self> {
        let n = labels.len();
        if entries.nrows() != n || entries.ncols() != n {
            return Err(Error::InvalidKernel(format!(
                "{} labels for a {}x{} matrix",
                n,
                entries.nrows(),
                entries.ncols()
            )));
        }
        let mut seen = std::collections::HashSet::new();
        for l in &labels {
            if !seen.insert(l.as_str()) {
                return Err(Error::InvalidKernel(format!("duplicate label `{l}`")));
            }
        }
        for i in 0..n {
            for j in 0..n {
                let v = entries[(i, j)];
                if !v.is_finite() {
                    return Err(Error::InvalidKernel(format!("non-finite entry at ({i}, {j})")));
                }
                if j > i && v != entries[(j, i)] {
                    return Err(Error::InvalidKernel(format!(
                        "not symmetric at ({i}, {j}): {v} vs {}",
                        entries[(j, i)]
                    )));
                }
            }
        }
        Ok(Self { labels, entries })
    }

    pub fn from_rows(labels: Vec<String>, rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if let Some(bad) = rows.iter().position(|r| r.len() != n) {
            return Err(Error::InvalidKernel(format!(
                "row {bad} has {} entries, expected {n}",
                rows[bad].len()
            )));
        }
        let entries = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        Self::new(labels, entries)
    }

    /// Labels `"0"`, `"1"`, ...
    pub fn unlabeled(rows: &[Vec<f64>]) -> Result<Self> {
        Self::from_rows((0..rows.len()).map(|i| i.to_string()).collect(), rows)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.entries.row(i).iter().copied().collect()).collect()
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn max_abs(&self) -> f64 {
        crate::linalg::max_abs(&self.entries)
    }

    pub fn has_zero_diagonal(&self) -> bool {
        (0..self.len()).all(|i| self.entries[(i, i)] == 0.0)
    }

    /// Entrywise map; symmetry is preserved because `f` is applied to equal
    /// values on both sides of the diagonal.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.labels.clone(), self.entries.map(f))
    }
}

/// `N_ij = d(x_i, x_j)` for the point set's p-metric.
pub fn distance_kernel(points: &PointSet) -> KernelMatrix {
    let n = points.len();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let d = points.metric(i, j);
            m[(i, j)] = d;
            m[(j, i)] = d;
        }
    }
    KernelMatrix::new(points.labels().to_vec(), m).expect("metric kernel is symmetric and finite")
}

/// Entrywise `exp(−t·N)`.
pub fn schoenberg_exp(n: &KernelMatrix, t: f64) -> Result<KernelMatrix> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::Precondition(format!("exponential transform needs t > 0, got {t}")));
    }
    n.map(|v| (-t * v).exp())
}

/// Entrywise `N^a` for `0 < a < 1`; all entries must be nonnegative.
pub fn snowflake_power(n: &KernelMatrix, a: f64) -> Result<KernelMatrix> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::Precondition(format!("power transform needs 0 < a < 1, got {a}")));
    }
    for i in 0..n.len() {
        for j in 0..n.len() {
            let v = n.get(i, j);
            if v < 0.0 {
                return Err(Error::NegativeEntry { row: i, col: j, value: v });
            }
        }
    }
    n.map(|v| v.powf(a))
}

/// Centering at a basepoint: `K_ij = ½(N_ib + N_jb − N_ij)`.
///
/// `N` must have zero diagonal and pass [`is_negative_definite`] at `tol`.
pub fn pd_from_nd(n: &KernelMatrix, basepoint: &str, tol: f64) -> Result<KernelMatrix> {
    let b = n.index_of(basepoint)?;
    if !n.has_zero_diagonal() {
        return Err(Error::Precondition("centering needs a zero-diagonal kernel".into()));
    }
    let verdict = is_negative_definite(n, tol)?;
    if !verdict.passed {
        return Err(Error::NotDefinite(Box::new(verdict)));
    }
    Ok(center_at(n, b))
}

pub(crate) fn center_at(n: &KernelMatrix, b: usize) -> KernelMatrix {
    let size = n.len();
    let e = n.entries();
    let k = DMatrix::from_fn(size, size, |i, j| 0.5 * (e[(i, b)] + e[(j, b)] - e[(i, j)]));
    KernelMatrix::new(n.labels().to_vec(), k).expect("centering preserves symmetry")
}

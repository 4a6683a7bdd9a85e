//! Explicit finite-dimensional Euclidean realizations of kernels.
//!
//! Every realization comes from one symmetric eigendecomposition
//! `K = QΛQᵀ`, with `T_i` the `i`-th row of `QΛ^{1/2}` restricted to the
//! strictly positive eigenvalues. Realizations are unique only up to an
//! orthogonal transform, so callers should compare Gram or distance matrices,
//! never raw coordinates.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{
    is_positive_definite, kernel_from_function, pd_from_nd, InvariantFunctionTable, KernelMatrix,
};
use crate::linalg::{euclidean_sq, symmetric_eigen};
use crate::spaces::PointSet;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct EmbeddingJson {
    labels: Vec<String>,
    dim: usize,
    vectors: Vec<Vec<f64>>,
}

/// Labelled vectors of a common dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "EmbeddingJson", into = "EmbeddingJson")]
pub struct EmbeddingCoordinates {
    labels: Vec<String>,
    dim: usize,
    vectors: Vec<Vec<f64>>,
}

impl TryFrom<EmbeddingJson> for EmbeddingCoordinates {
    type Error = Error;

    fn try_from(raw: EmbeddingJson) -> Result<Self> {
        EmbeddingCoordinates::new(raw.labels, raw.dim, raw.vectors)
    }
}

impl From<EmbeddingCoordinates> for EmbeddingJson {
    fn from(e: EmbeddingCoordinates) -> Self {
        EmbeddingJson { labels: e.labels, dim: e.dim, vectors: e.vectors }
    }
}

impl EmbeddingCoordinates {
    pub fn new(labels: Vec<String>, dim: usize, vectors: Vec<Vec<f64>>) -> Result<Self> {
        if labels.len() != vectors.len() {
            return Err(Error::InvalidPointSet(format!(
                "{} labels for {} vectors",
                labels.len(),
                vectors.len()
            )));
        }
        for (l, v) in labels.iter().zip(&vectors) {
            if v.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: v.len() });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidPointSet(format!("vector `{l}` has a non-finite entry")));
            }
        }
        Ok(Self { labels, dim, vectors })
    }

    /// Points of a sample taken as Euclidean vectors.
    pub fn from_points(points: &PointSet) -> Self {
        Self {
            labels: points.labels().to_vec(),
            dim: points.space().dim,
            vectors: points.points().to_vec(),
        }
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        &self.vectors[i]
    }

    pub fn distance_sq(&self, i: usize, j: usize) -> f64 {
        euclidean_sq(&self.vectors[i], &self.vectors[j])
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.distance_sq(i, j).sqrt()
    }

    pub fn norm(&self, i: usize) -> f64 {
        self.vectors[i].iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.len() {
            return Err(Error::InvalidPointSet("relabelling must keep the point count".into()));
        }
        self.labels = labels;
        Ok(self)
    }

    /// One row per point: `label,c0,c1,...`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("label");
        for k in 0..self.dim {
            write!(out, ",c{k}").unwrap();
        }
        out.push('\n');
        for (l, v) in self.labels.iter().zip(&self.vectors) {
            out.push_str(l);
            for x in v {
                write!(out, ",{x}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

/// `‖T_i − T_j‖²`, exactly symmetric with zero diagonal.
pub fn squared_distance_kernel(coords: &EmbeddingCoordinates) -> KernelMatrix {
    let n = coords.len();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let d = coords.distance_sq(i, j);
            m[(i, j)] = d;
            m[(j, i)] = d;
        }
    }
    KernelMatrix::new(coords.labels().to_vec(), m).expect("squared distances are symmetric and finite")
}

/// `⟨T_i, T_j⟩`.
pub fn gram_kernel(coords: &EmbeddingCoordinates) -> KernelMatrix {
    let n = coords.len();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let g: f64 = coords.vector(i).iter().zip(coords.vector(j)).map(|(a, b)| a * b).sum();
            m[(i, j)] = g;
            m[(j, i)] = g;
        }
    }
    KernelMatrix::new(coords.labels().to_vec(), m).expect("inner products are symmetric and finite")
}

/// Feature vectors with `⟨T_i, T_j⟩ = K_ij`.
///
/// Eigenvalues in `[−tol, 0)` are treated as zero; anything more negative is a
/// PD failure and is returned as [`Error::NotDefinite`] with its certificate.
pub fn feature_map_from_pd(k: &KernelMatrix, tol: f64) -> Result<EmbeddingCoordinates> {
    if !(tol > 0.0) {
        return Err(Error::Precondition(format!("tolerance must be positive, got {tol}")));
    }
    let n = k.len();
    let eig = symmetric_eigen(k.entries())?;
    if n > 0 && eig.values[0] < -tol {
        let verdict = is_positive_definite(k, tol)?;
        return Err(Error::NotDefinite(Box::new(verdict)));
    }
    // descending, strictly positive
    let kept: Vec<usize> = (0..n).rev().filter(|&c| eig.values[c] > 0.0).collect();
    let roots: Vec<f64> = kept.iter().map(|&c| eig.values[c].sqrt()).collect();
    let vectors = (0..n)
        .map(|i| kept.iter().zip(&roots).map(|(&c, r)| eig.vectors[(i, c)] * r).collect())
        .collect();
    EmbeddingCoordinates::new(k.labels().to_vec(), kept.len(), vectors)
}

/// Vectors with `‖T_i − T_j‖² = N_ij` and `T_basepoint = 0`.
pub fn embedding_from_nd(n: &KernelMatrix, basepoint: &str, tol: f64) -> Result<EmbeddingCoordinates> {
    let k = pd_from_nd(n, basepoint, tol)?;
    let mut coords = feature_map_from_pd(&k, tol)?;
    let b = n.index_of(basepoint)?;
    // K_bb = 0 makes the basepoint row vanish up to rounding; shift it to 0
    let origin = coords.vectors[b].clone();
    for v in &mut coords.vectors {
        for (x, o) in v.iter_mut().zip(&origin) {
            *x -= o;
        }
    }
    coords.vectors[b].iter_mut().for_each(|x| *x = 0.0);
    Ok(coords)
}

/// Unit vectors with `⟨T(x), T(y)⟩ = f(x − y)` for a PD function with `f(0) = 1`.
pub fn sphere_embedding_from_pd_function(
    f: &InvariantFunctionTable,
    points: &PointSet,
    tol: f64,
) -> Result<EmbeddingCoordinates> {
    let f0 = f.origin_value();
    if (f0 - 1.0).abs() > 1e-12 {
        return Err(Error::Precondition(format!("sphere embedding needs f(0) = 1, found {f0}")));
    }
    let k = kernel_from_function(f, points)?;
    feature_map_from_pd(&k, tol)
}

/// Realizes `x ↦ T(x)` on the unit sphere with `⟨T(x), T(y)⟩ = e^{−‖x−y‖²}`,
/// so that `‖T(x) − T(y)‖² = 2(1 − e^{−‖x−y‖²})`.
pub fn gaussian_sphere_embedding(coords: &EmbeddingCoordinates, tol: f64) -> Result<EmbeddingCoordinates> {
    let n = coords.len();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = 1.0;
        for j in i + 1..n {
            let v = (-coords.distance_sq(i, j)).exp();
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    let k = KernelMatrix::new(coords.labels().to_vec(), m)?;
    feature_map_from_pd(&k, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::{sample_grid, QuasiNormedSpace};

    fn km(rows: &[&[f64]]) -> KernelMatrix {
        KernelMatrix::unlabeled(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn max_gram_error(k: &KernelMatrix, t: &EmbeddingCoordinates) -> f64 {
        let g = gram_kernel(t);
        (g.entries() - k.entries()).abs().max()
    }

    #[test]
    fn feature_map_examples() {
        let id = km(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let t = feature_map_from_pd(&id, 1e-9).unwrap();
        assert_eq!(t.dim(), 2);
        assert!(max_gram_error(&id, &t) < 1e-15);

        let k = km(&[&[0.0, 0.0], &[0.0, 2.0]]);
        let t = feature_map_from_pd(&k, 1e-9).unwrap();
        assert_eq!(t.dim(), 1);
        assert_eq!(t.norm(0), 0.0);
        assert!((t.norm(1).powi(2) - 2.0).abs() < 1e-14);

        let e = (-1.0f64).exp();
        let k = km(&[&[1.0, e], &[e, 1.0]]);
        assert!(max_gram_error(&k, &feature_map_from_pd(&k, 1e-9).unwrap()) < 1e-10);
    }

    #[test]
    fn feature_map_rejects_indefinite() {
        let k = km(&[&[0.0, 1.0], &[1.0, 0.0]]);
        match feature_map_from_pd(&k, 1e-9) {
            Err(Error::NotDefinite(v)) => assert!(v.certificate.is_some()),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn small_negative_eigenvalues_are_clamped() {
        let k = km(&[&[1.0, 1.0], &[1.0, 1.0 - 1e-12]]);
        let t = feature_map_from_pd(&k, 1e-9).unwrap();
        assert_eq!(t.dim(), 1);
    }

    #[test]
    fn nd_realization_examples() {
        let t = embedding_from_nd(&km(&[&[0.0, 2.0], &[2.0, 0.0]]), "0", 1e-9).unwrap();
        assert!((t.distance_sq(0, 1) - 2.0).abs() < 1e-14);
        assert!(t.vector(0).iter().all(|&x| x == 0.0));

        // planar triangle (0,0), (1,0), (0,1)
        let n = km(&[&[0.0, 1.0, 1.0], &[1.0, 0.0, 2.0], &[1.0, 2.0, 0.0]]);
        let t = embedding_from_nd(&n, "1", 1e-9).unwrap();
        let back = squared_distance_kernel(&t);
        assert!((back.entries() - n.entries()).abs().max() < 1e-10);
        assert!(t.vector(1).iter().all(|&x| x == 0.0));

        let zero = km(&[&[0.0, 0.0, 0.0], &[0.0, 0.0, 0.0], &[0.0, 0.0, 0.0]]);
        let t = embedding_from_nd(&zero, "2", 1e-9).unwrap();
        assert_eq!(t.dim(), 0);
        assert!(squared_distance_kernel(&t).entries().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn sphere_embedding_examples() {
        let line = QuasiNormedSpace::lq(1, 2.0).unwrap();
        let support = sample_grid(&line, 3, 1.0).unwrap();

        let one = InvariantFunctionTable::from_fn(support.clone(), |_| 1.0).unwrap();
        let pts = PointSet::from_points(line, vec![vec![0.0], vec![1.0], vec![2.0]]).unwrap();
        let t = sphere_embedding_from_pd_function(&one, &pts, 1e-9).unwrap();
        assert_eq!(t.dim(), 1);
        for i in 0..3 {
            assert!((t.norm(i) - 1.0).abs() < 1e-10);
            for j in 0..3 {
                assert!(t.distance_sq(i, j) < 1e-14);
            }
        }

        let gauss = InvariantFunctionTable::from_fn(support, |x| (-x[0] * x[0]).exp()).unwrap();
        let pair = PointSet::from_points(line, vec![vec![0.0], vec![1.0]]).unwrap();
        let t = sphere_embedding_from_pd_function(&gauss, &pair, 1e-9).unwrap();
        let expected = 2.0 * (1.0 - (-1.0f64).exp());
        assert!((expected - 1.264_241_117_657_115).abs() < 1e-14);
        assert!((t.distance_sq(0, 1) - expected).abs() < 1e-8);

        let single = PointSet::from_points(line, vec![vec![0.0]]).unwrap();
        let t = sphere_embedding_from_pd_function(&gauss, &single, 1e-9).unwrap();
        assert!((t.norm(0) - 1.0).abs() < 1e-10);

        let shifted = gauss.map(|v| 2.0 * v).unwrap();
        assert!(sphere_embedding_from_pd_function(&shifted, &pair, 1e-9).is_err());
    }

    #[test]
    fn gaussian_embedding_examples() {
        let labels = vec!["a".to_string(), "b".to_string(), "c".to_string()];
        let src = EmbeddingCoordinates::new(labels, 1, vec![vec![0.0], vec![1.0], vec![10.0]]).unwrap();
        let t = gaussian_sphere_embedding(&src, 1e-9).unwrap();
        assert!((t.distance_sq(0, 1) - 2.0 * (1.0 - (-1.0f64).exp())).abs() < 1e-8);
        assert!((t.distance_sq(0, 2) - 2.0).abs() < 1e-12);

        let same = EmbeddingCoordinates::new(vec!["a".into(), "b".into()], 2, vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let t = gaussian_sphere_embedding(&same, 1e-9).unwrap();
        assert!(t.distance(0, 1) < 1e-7);
    }

    #[test]
    fn csv_export() {
        let e = EmbeddingCoordinates::new(vec!["a".into(), "b".into()], 2, vec![vec![1.0, 0.5], vec![0.0, -2.0]]).unwrap();
        assert_eq!(e.to_csv(), "label,c0,c1\na,1,0.5\nb,0,-2\n");
    }
}

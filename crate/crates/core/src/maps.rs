//! Maps from a quasi-normed space into Euclidean space that can be evaluated
//! on any finite domain.
//!
//! Maps such as the Gaussian sphere map have no finite-dimensional closed
//! form, so evaluation means *realizing* the map on a whole domain at once:
//! distances among the returned vectors are the map's distances. Two
//! realizations of one map on different domains may differ by an isometry.
//! Implementations must be pure.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use nalgebra::DMatrix;

use crate::embeddings::{gaussian_sphere_embedding, squared_distance_kernel, EmbeddingCoordinates};
use crate::error::{Error, Result};
use crate::kernels::KernelMatrix;
use crate::linalg::euclidean_sq;
use crate::spaces::{coordinate_label, PointSet, QuasiNormedSpace};

pub trait EvaluableMap: Send + Sync {
    fn name(&self) -> String;

    /// Images of every domain point, in domain order, labelled alike.
    fn realize(&self, domain: &PointSet) -> Result<EmbeddingCoordinates>;

    /// `‖T(x_i) − T(x_j)‖²` over the domain. Maps with a closed form override
    /// this to skip the realization and its rounding.
    fn squared_distances(&self, domain: &PointSet) -> Result<KernelMatrix> {
        Ok(squared_distance_kernel(&self.realize(domain)?))
    }

    /// Constant `C` with `‖T(x) − T(y)‖ ≤ C·‖x − y‖` for all `x, y`, when known.
    fn lipschitz_constant(&self, _space: &QuasiNormedSpace) -> Option<f64> {
        None
    }

    /// Whether every image has unit norm.
    fn sphere_valued(&self) -> bool {
        false
    }
}

/// `sup ‖v‖₂ / ‖v‖_q` on the coordinate space.
fn kernel_of(domain: &PointSet, entry: impl Fn(&[f64], &[f64]) -> f64) -> KernelMatrix {
    let n = domain.len();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let v = entry(domain.point(i), domain.point(j));
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    KernelMatrix::new(domain.labels().to_vec(), m).expect("closed-form distances are finite")
}

fn euclidean_over_lq(space: &QuasiNormedSpace) -> f64 {
    if space.q <= 2.0 {
        1.0
    } else {
        (space.dim as f64).powf(0.5 - 1.0 / space.q)
    }
}

/// Coordinates taken as Euclidean vectors.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityMap;

impl EvaluableMap for IdentityMap {
    fn name(&self) -> String {
        "identity".into()
    }

    fn realize(&self, domain: &PointSet) -> Result<EmbeddingCoordinates> {
        Ok(EmbeddingCoordinates::from_points(domain))
    }

    fn squared_distances(&self, domain: &PointSet) -> Result<KernelMatrix> {
        Ok(kernel_of(domain, euclidean_sq))
    }

    fn lipschitz_constant(&self, space: &QuasiNormedSpace) -> Option<f64> {
        Some(euclidean_over_lq(space))
    }
}

/// Every point goes to the same unit vector.
#[derive(Debug, Clone, Copy, Default)]
pub struct ConstantMap;

impl EvaluableMap for ConstantMap {
    fn name(&self) -> String {
        "constant".into()
    }

    fn realize(&self, domain: &PointSet) -> Result<EmbeddingCoordinates> {
        EmbeddingCoordinates::new(domain.labels().to_vec(), 1, vec![vec![1.0]; domain.len()])
    }

    fn squared_distances(&self, domain: &PointSet) -> Result<KernelMatrix> {
        Ok(kernel_of(domain, |_, _| 0.0))
    }

    fn lipschitz_constant(&self, _space: &QuasiNormedSpace) -> Option<f64> {
        Some(0.0)
    }

    fn sphere_valued(&self) -> bool {
        true
    }
}

/// `x ↦ T(x)` on the unit sphere with `⟨T(x), T(y)⟩ = e^{−‖x−y‖₂²}`.
#[derive(Debug, Clone, Copy)]
pub struct GaussianSphereMap {
    /// Eigenvalue clamping tolerance for the realization.
    pub tol: f64,
}

impl Default for GaussianSphereMap {
    fn default() -> Self {
        Self { tol: 1e-9 }
    }
}

impl GaussianSphereMap {
    /// `‖T(x) − T(y)‖` as a function of `‖x − y‖₂`.
    pub fn image_distance(euclidean: f64) -> f64 {
        Self::image_distance_sq(euclidean * euclidean).sqrt()
    }

    /// `‖T(x) − T(y)‖²` as a function of `‖x − y‖₂²`.
    pub fn image_distance_sq(euclidean_sq: f64) -> f64 {
        2.0 * (1.0 - (-euclidean_sq).exp())
    }
}

impl EvaluableMap for GaussianSphereMap {
    fn name(&self) -> String {
        "gaussian".into()
    }

    fn realize(&self, domain: &PointSet) -> Result<EmbeddingCoordinates> {
        gaussian_sphere_embedding(&EmbeddingCoordinates::from_points(domain), self.tol)
    }

    fn squared_distances(&self, domain: &PointSet) -> Result<KernelMatrix> {
        Ok(kernel_of(domain, |x, y| Self::image_distance_sq(euclidean_sq(x, y))))
    }

    fn lipschitz_constant(&self, space: &QuasiNormedSpace) -> Option<f64> {
        // 2(1 − e^{−u²}) ≤ 2u²
        Some(std::f64::consts::SQRT_2 * euclidean_over_lq(space))
    }

    fn sphere_valued(&self) -> bool {
        true
    }
}

/// `T_a(x) = T(a·x)`.
pub struct RescaledMap<'a> {
    pub base: &'a dyn EvaluableMap,
    pub a: f64,
}

impl EvaluableMap for RescaledMap<'_> {
    fn name(&self) -> String {
        format!("{}@{}", self.base.name(), self.a)
    }

    fn realize(&self, domain: &PointSet) -> Result<EmbeddingCoordinates> {
        let image = self.base.realize(&domain.scaled(self.a)?)?;
        image.with_labels(domain.labels().to_vec())
    }

    fn squared_distances(&self, domain: &PointSet) -> Result<KernelMatrix> {
        let k = self.base.squared_distances(&domain.scaled(self.a)?)?;
        KernelMatrix::new(domain.labels().to_vec(), k.entries().clone())
    }

    fn lipschitz_constant(&self, space: &QuasiNormedSpace) -> Option<f64> {
        self.base.lipschitz_constant(space).map(|c| c * self.a.abs())
    }

    fn sphere_valued(&self) -> bool {
        self.base.sphere_valued()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TabulatedJson {
    points: Vec<Vec<f64>>,
    images: Vec<Vec<f64>>,
}

/// A map known only on a finite set of points.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "TabulatedJson", into = "TabulatedJson")]
pub struct TabulatedMap {
    points: Vec<Vec<f64>>,
    images: Vec<Vec<f64>>,
    lookup: HashMap<Vec<u64>, usize>,
}

fn key(x: &[f64]) -> Vec<u64> {
    x.iter().map(|v| (v + 0.0).to_bits()).collect()
}

impl TryFrom<TabulatedJson> for TabulatedMap {
    type Error = Error;

    fn try_from(raw: TabulatedJson) -> Result<Self> {
        TabulatedMap::new(raw.points, raw.images)
    }
}

impl From<TabulatedMap> for TabulatedJson {
    fn from(m: TabulatedMap) -> Self {
        TabulatedJson { points: m.points, images: m.images }
    }
}

impl TabulatedMap {
    pub fn new(points: Vec<Vec<f64>>, images: Vec<Vec<f64>>) -> Result<Self> {
        if points.len() != images.len() {
            return Err(Error::InvalidPointSet(format!(
                "{} points but {} images",
                points.len(),
                images.len()
            )));
        }
        if let Some(first) = images.first() {
            if let Some(bad) = images.iter().find(|v| v.len() != first.len()) {
                return Err(Error::DimensionMismatch { expected: first.len(), got: bad.len() });
            }
        }
        let mut lookup = HashMap::with_capacity(points.len());
        for (i, p) in points.iter().enumerate() {
            if lookup.insert(key(p), i).is_some() {
                return Err(Error::InvalidPointSet(format!("point {} listed twice", coordinate_label(p))));
            }
        }
        Ok(Self { points, images, lookup })
    }

    pub fn from_realization(domain: &PointSet, image: &EmbeddingCoordinates) -> Result<Self> {
        Self::new(domain.points().to_vec(), image.vectors().to_vec())
    }
}

impl EvaluableMap for TabulatedMap {
    fn name(&self) -> String {
        format!("tabulated({} points)", self.points.len())
    }

    fn realize(&self, domain: &PointSet) -> Result<EmbeddingCoordinates> {
        let dim = self.images.first().map_or(0, Vec::len);
        let vectors = domain
            .points()
            .iter()
            .map(|x| {
                self.lookup
                    .get(&key(x))
                    .map(|&i| self.images[i].clone())
                    .ok_or_else(|| Error::Evaluation(format!("({}) outside the tabulated domain", coordinate_label(x))))
            })
            .collect::<Result<Vec<_>>>()?;
        EmbeddingCoordinates::new(domain.labels().to_vec(), dim, vectors)
    }

    fn sphere_valued(&self) -> bool {
        !self.images.is_empty()
            && self.images.iter().all(|v| (v.iter().map(|x| x * x).sum::<f64>().sqrt() - 1.0).abs() <= 1e-10)
    }
}

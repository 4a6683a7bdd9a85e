//! Finite-dimensional coordinate ℓ_q spaces with their p-metric, and the
//! finite point samples every other module works on.
//!
//! A [`QuasiNormedSpace`] carries the coordinate quasi-norm
//! `‖x‖_q = (Σ|x_i|^q)^{1/q}` together with an exponent `p ∈ (0, 1]` for which
//! `‖x + y‖^p ≤ ‖x‖^p + ‖y‖^p`. The invariant metric is `d(x, y) = ‖x − y‖^p`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_GRID_CAP: usize = 5000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuasiNormedSpace {
    pub dim: usize,
    pub p: f64,
    pub q: f64,
}

impl QuasiNormedSpace {
    /// Validates `dim ≥ 1`, `q > 0` and `0 < p ≤ min(q, 1)`; the last bound is
    /// exactly when the p-triangle inequality holds for the ℓ_q quasi-norm.
    pub fn new(dim: usize, p: f64, q: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidSpace("dim must be at least 1".into()));
        }
        if !(q > 0.0) || !q.is_finite() {
            return Err(Error::InvalidSpace(format!("q must be positive and finite, got {q}")));
        }
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::InvalidSpace(format!("p must lie in (0, 1], got {p}")));
        }
        if p > q {
            return Err(Error::InvalidSpace(format!("p = {p} exceeds q = {q}")));
        }
        Ok(Self { dim, p, q })
    }

    /// Coordinate ℓ_q with the canonical exponent: `p = q` below 1, `p = 1` otherwise.
    pub fn lq(dim: usize, q: f64) -> Result<Self> {
        Self::new(dim, q.min(1.0), q)
    }

    pub fn euclidean(dim: usize) -> Self {
        Self { dim, p: 1.0, q: 2.0 }
    }

    pub(crate) fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        Ok(())
    }

    pub fn quasi_norm(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        Ok(self.norm_unchecked(x))
    }

    fn norm_unchecked(&self, x: &[f64]) -> f64 {
        if self.q == 2.0 {
            x.iter().map(|v| v * v).sum::<f64>().sqrt()
        } else if self.q == 1.0 {
            x.iter().map(|v| v.abs()).sum()
        } else {
            x.iter().map(|v| v.abs().powf(self.q)).sum::<f64>().powf(1.0 / self.q)
        }
    }

    /// `‖x‖^p`, the distance from `x` to the origin.
    pub fn p_norm(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        Ok(self.p_norm_unchecked(x))
    }

    fn p_norm_unchecked(&self, x: &[f64]) -> f64 {
        if self.p == self.q {
            // (Σ|x_i|^q)^{p/q} collapses to Σ|x_i|^q
            if self.q == 1.0 {
                return x.iter().map(|v| v.abs()).sum();
            }
            return x.iter().map(|v| v.abs().powf(self.q)).sum();
        }
        let n = self.norm_unchecked(x);
        if self.p == 1.0 {
            n
        } else {
            n.powf(self.p)
        }
    }

    pub fn metric(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        self.check_dim(y)?;
        Ok(self.metric_unchecked(x, y))
    }

    pub(crate) fn metric_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        let diff: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
        self.p_norm_unchecked(&diff)
    }
}

/// Key for exact point lookup; `-0.0` is folded into `0.0` first.
fn point_key(x: &[f64]) -> Vec<u64> {
    x.iter().map(|v| (v + 0.0).to_bits()).collect()
}

fn normalize(mut x: Vec<f64>) -> Vec<f64> {
    for v in &mut x {
        *v += 0.0;
    }
    x
}

/// Default label for a point: its coordinates joined by commas.
pub fn coordinate_label(x: &[f64]) -> String {
    x.iter().map(|v| format!("{}", v + 0.0)).collect::<Vec<_>>().join(",")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PointSetJson {
    dim: usize,
    p: f64,
    q: f64,
    labels: Vec<String>,
    points: Vec<Vec<f64>>,
}

/// Ordered, labelled, duplicate-free sample of a [`QuasiNormedSpace`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "PointSetJson", into = "PointSetJson")]
pub struct PointSet {
    space: QuasiNormedSpace,
    points: Vec<Vec<f64>>,
    labels: Vec<String>,
    by_point: HashMap<Vec<u64>, usize>,
    by_label: HashMap<String, usize>,
}

impl TryFrom<PointSetJson> for PointSet {
    type Error = Error;

    fn try_from(raw: PointSetJson) -> Result<Self> {
        let space = QuasiNormedSpace::new(raw.dim, raw.p, raw.q)?;
        PointSet::new(space, raw.points, raw.labels)
    }
}

impl From<PointSet> for PointSetJson {
    fn from(set: PointSet) -> Self {
        PointSetJson {
            dim: set.space.dim,
            p: set.space.p,
            q: set.space.q,
            labels: set.labels,
            points: set.points,
        }
    }
}

impl PartialEq for PointSet {
    fn eq(&self, other: &Self) -> bool {
        self.space == other.space && self.points == other.points && self.labels == other.labels
    }
}

impl PointSet {
    pub fn new(space: QuasiNormedSpace, points: Vec<Vec<f64>>, labels: Vec<String>) -> Result<Self> {
        if points.len() != labels.len() {
            return Err(Error::InvalidPointSet(format!(
                "{} points but {} labels",
                points.len(),
                labels.len()
            )));
        }
        let mut by_point = HashMap::with_capacity(points.len());
        let mut by_label = HashMap::with_capacity(points.len());
        let mut normalized = Vec::with_capacity(points.len());
        for (i, (pt, label)) in points.into_iter().zip(&labels).enumerate() {
            space.check_dim(&pt)?;
            if pt.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidPointSet(format!("point `{label}` has a non-finite coordinate")));
            }
            let pt = normalize(pt);
            if by_point.insert(point_key(&pt), i).is_some() {
                return Err(Error::InvalidPointSet(format!("duplicate point `{label}`")));
            }
            if by_label.insert(label.clone(), i).is_some() {
                return Err(Error::InvalidPointSet(format!("duplicate label `{label}`")));
            }
            normalized.push(pt);
        }
        Ok(Self { space, points: normalized, labels, by_point, by_label })
    }

    /// Labels every point by its coordinates. Duplicate points are dropped,
    /// keeping the first occurrence.
    pub fn from_points(space: QuasiNormedSpace, points: Vec<Vec<f64>>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        let mut kept = Vec::new();
        for pt in points {
            let pt = normalize(pt);
            if seen.insert(point_key(&pt)) {
                kept.push(pt);
            }
        }
        let labels = kept.iter().map(|p| coordinate_label(p)).collect();
        Self::new(space, kept, labels)
    }

    pub fn space(&self) -> &QuasiNormedSpace {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn position(&self, x: &[f64]) -> Option<usize> {
        self.by_point.get(&point_key(x)).copied()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.by_label.get(label).copied()
    }

    pub fn require_label(&self, label: &str) -> Result<usize> {
        self.index_of(label).ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.position(x).is_some()
    }

    pub fn metric(&self, i: usize, j: usize) -> f64 {
        self.space.metric_unchecked(&self.points[i], &self.points[j])
    }

    pub fn p_norm(&self, i: usize) -> f64 {
        self.space.p_norm_unchecked(&self.points[i])
    }

    pub fn diameter(&self) -> f64 {
        let mut best = 0.0_f64;
        for i in 0..self.len() {
            for j in i + 1..self.len() {
                best = best.max(self.metric(i, j));
            }
        }
        best
    }

    pub fn is_negation_closed(&self) -> bool {
        self.points.iter().all(|x| {
            let neg: Vec<f64> = x.iter().map(|v| -v).collect();
            self.contains(&neg)
        })
    }

    /// `{x_i − x_j}` over all ordered pairs, origin first, then in order of
    /// first appearance. Closed under negation since `a − b = −(b − a)` in
    /// IEEE arithmetic.
    pub fn differences(&self) -> PointSet {
        let mut pts = vec![vec![0.0; self.space.dim]];
        for i in 0..self.len() {
            for j in 0..self.len() {
                if i != j {
                    pts.push(sub(&self.points[i], &self.points[j]));
                }
            }
        }
        PointSet::from_points(self.space, pts).expect("differences of finite points are finite")
    }

    /// The same labels attached to `a · x`.
    pub fn scaled(&self, a: f64) -> Result<PointSet> {
        let pts = self.points.iter().map(|x| x.iter().map(|v| a * v).collect()).collect();
        PointSet::new(self.space, pts, self.labels.clone())
    }

    /// Appends points not already present; labels of new points that collide
    /// with existing labels get a `#k` suffix.
    pub fn extended<I: IntoIterator<Item = Vec<f64>>>(&self, extra: I) -> PointSet {
        let mut points = self.points.clone();
        let mut labels = self.labels.clone();
        let mut by_point = self.by_point.clone();
        let mut by_label = self.by_label.clone();
        for pt in extra {
            let pt = normalize(pt);
            let key = point_key(&pt);
            if by_point.contains_key(&key) {
                continue;
            }
            let base = coordinate_label(&pt);
            let mut label = base.clone();
            let mut k = 1;
            while by_label.contains_key(&label) {
                label = format!("{base}#{k}");
                k += 1;
            }
            by_point.insert(key, points.len());
            by_label.insert(label.clone(), points.len());
            points.push(pt);
            labels.push(label);
        }
        PointSet { space: self.space, points, labels, by_point, by_label }
    }

    /// Sub-sample in the given index order.
    pub fn select(&self, indices: &[usize]) -> PointSet {
        let pts = indices.iter().map(|&i| self.points[i].clone()).collect();
        let labels = indices.iter().map(|&i| self.labels[i].clone()).collect();
        PointSet::new(self.space, pts, labels).expect("sub-sample of a valid set is valid")
    }
}

pub(crate) fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub(crate) fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// Integer grid `{−radius..radius}^dim` scaled by `step`, capped at
/// [`DEFAULT_GRID_CAP`] points.
pub fn sample_grid(space: &QuasiNormedSpace, radius: u32, step: f64) -> Result<PointSet> {
    sample_grid_capped(space, radius, step, DEFAULT_GRID_CAP)
}

pub fn sample_grid_capped(space: &QuasiNormedSpace, radius: u32, step: f64, cap: usize) -> Result<PointSet> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::InvalidPointSet(format!("grid step must be positive, got {step}")));
    }
    let side = 2 * radius as usize + 1;
    let count = (side as u128).checked_pow(space.dim as u32).unwrap_or(u128::MAX);
    if count > cap as u128 {
        return Err(Error::GridCapExceeded { count: count.min(usize::MAX as u128) as usize, cap });
    }
    let count = count as usize;
    let r = radius as i64;
    let mut points = Vec::with_capacity(count);
    let mut idx = vec![-r; space.dim];
    for _ in 0..count {
        // exact multiples of the step keep translations bit-exact
        points.push(idx.iter().map(|&k| k as f64 * step).collect());
        for d in (0..space.dim).rev() {
            if idx[d] < r {
                idx[d] += 1;
                break;
            }
            idx[d] = -r;
        }
    }
    PointSet::from_points(*space, points)
}

/// `base ∪ {k·x : 0 ≤ k ≤ n_max}`.
pub fn multiples_closure(base: &PointSet, x: &[f64], n_max: u32) -> Result<PointSet> {
    base.space().check_dim(x)?;
    let multiples = (0..=n_max).map(|k| x.iter().map(|v| k as f64 * v).collect::<Vec<f64>>());
    Ok(base.extended(multiples))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coords(set: &PointSet) -> Vec<Vec<f64>> {
        let mut pts = set.points().to_vec();
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        pts
    }

    #[test]
    fn quasi_norm_examples() {
        let half = QuasiNormedSpace::lq(2, 0.5).unwrap();
        assert_eq!(half.quasi_norm(&[1.0, 1.0]).unwrap(), 4.0);
        assert_eq!(half.quasi_norm(&[0.0, 0.0]).unwrap(), 0.0);
        let l2 = QuasiNormedSpace::lq(2, 2.0).unwrap();
        assert_eq!(l2.quasi_norm(&[3.0, 4.0]).unwrap(), 5.0);
        assert!(matches!(
            l2.quasi_norm(&[1.0]),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn metric_examples() {
        let half = QuasiNormedSpace::lq(2, 0.5).unwrap();
        assert_eq!(half.metric(&[1.0, 0.0], &[0.0, 0.0]).unwrap(), 1.0);
        assert_eq!(half.metric(&[1.0, 1.0], &[0.0, 0.0]).unwrap(), 2.0);
        assert_eq!(half.metric(&[0.3, -2.0], &[0.3, -2.0]).unwrap(), 0.0);
    }

    #[test]
    fn canonical_exponents() {
        assert_eq!(QuasiNormedSpace::lq(3, 0.25).unwrap().p, 0.25);
        assert_eq!(QuasiNormedSpace::lq(3, 3.0).unwrap().p, 1.0);
        assert!(QuasiNormedSpace::new(1, 0.8, 0.5).is_err());
        assert!(QuasiNormedSpace::new(0, 1.0, 1.0).is_err());
        assert!(QuasiNormedSpace::new(1, 0.0, 1.0).is_err());
    }

    #[test]
    fn grid_examples() {
        let line = QuasiNormedSpace::lq(1, 1.0).unwrap();
        let g = sample_grid(&line, 2, 1.0).unwrap();
        assert_eq!(coords(&g), vec![vec![-2.0], vec![-1.0], vec![0.0], vec![1.0], vec![2.0]]);

        let plane = QuasiNormedSpace::lq(2, 1.0).unwrap();
        let g = sample_grid(&plane, 1, 1.0).unwrap();
        assert_eq!(g.len(), 9);
        assert!(g.contains(&[0.0, 0.0]) && g.is_negation_closed());

        let g = sample_grid(&line, 3, 0.5).unwrap();
        assert_eq!(g.len(), 7);
        assert_eq!(coords(&g).first().unwrap(), &vec![-1.5]);
        assert_eq!(coords(&g).last().unwrap(), &vec![1.5]);
    }

    #[test]
    fn grid_cap_is_enforced() {
        let cube = QuasiNormedSpace::lq(4, 1.0).unwrap();
        assert!(matches!(
            sample_grid(&cube, 10, 1.0),
            Err(Error::GridCapExceeded { count: 194_481, cap: DEFAULT_GRID_CAP })
        ));
    }

    #[test]
    fn multiples_closure_examples() {
        let line = QuasiNormedSpace::lq(1, 1.0).unwrap();
        let origin = PointSet::from_points(line, vec![vec![0.0]]).unwrap();
        let c = multiples_closure(&origin, &[1.0], 3).unwrap();
        assert_eq!(coords(&c), vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]]);

        let base = PointSet::from_points(line, vec![vec![0.0], vec![5.0]]).unwrap();
        let c = multiples_closure(&base, &[2.0], 2).unwrap();
        assert_eq!(coords(&c), vec![vec![0.0], vec![2.0], vec![4.0], vec![5.0]]);

        let c = multiples_closure(&origin, &[0.0], 7).unwrap();
        assert_eq!(c.len(), 1);
    }

    #[test]
    fn rejects_duplicates_and_bad_labels() {
        let line = QuasiNormedSpace::lq(1, 1.0).unwrap();
        let dup = PointSet::new(line, vec![vec![0.0], vec![-0.0]], vec!["a".into(), "b".into()]);
        assert!(dup.is_err());
        let lab = PointSet::new(line, vec![vec![0.0], vec![1.0]], vec!["a".into(), "a".into()]);
        assert!(lab.is_err());
        let short = PointSet::new(line, vec![vec![0.0]], vec![]);
        assert!(short.is_err());
    }

    #[test]
    fn json_shape() {
        let line = QuasiNormedSpace::lq(1, 0.5).unwrap();
        let g = sample_grid(&line, 1, 1.0).unwrap();
        let v: serde_json::Value = serde_json::to_value(&g).unwrap();
        assert_eq!(v["dim"], 1);
        assert_eq!(v["p"], 0.5);
        assert_eq!(v["labels"][0], "-1");
        assert_eq!(v["points"][2][0], 1.0);
        let back: PointSet = serde_json::from_value(v).unwrap();
        assert_eq!(back, g);
    }
}

//! Empirical compression and expansion moduli of a mapped sample,
//!
//! ```text
//! φ̂(t) = min { ‖T(x) − T(y)‖ : d(x, y) ≥ t }      (+∞ when no pair qualifies)
//! ω̂(t) = max { ‖T(x) − T(y)‖ : d(x, y) ≤ t }      (0 when no pair qualifies)
//! ```
//!
//! and the modulus functions of tabulated definite functions (see
//! [`g_f_modulus`], [`rho_f_modulus`]). On a finite sample φ̂ only upper-bounds
//! the true compression modulus and ω̂ only lower-bounds the true expansion
//! modulus, so every profile carries the qualifying-pair counts.

mod function;

pub use function::{
    g_f_modulus, growth_check, propagation_check, propagation_check_positive, rho_f_modulus,
    GrowthReport, GrowthRow, PropagationReport, SubadditivityRow,
};

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embeddings::EmbeddingCoordinates;
use crate::error::{Error, Result};
use crate::maps::{EvaluableMap, RescaledMap};
use crate::report::inf_marker;
use crate::spaces::PointSet;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairDistance {
    pub i: usize,
    pub j: usize,
    pub source: f64,
    pub image: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct MappedSampleJson {
    source: PointSet,
    image: EmbeddingCoordinates,
}

/// A map's values on a finite sample: `image[i] = T(source[i])`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "MappedSampleJson", into = "MappedSampleJson")]
pub struct MappedSample {
    source: PointSet,
    image: EmbeddingCoordinates,
    pair_cache: Option<Vec<PairDistance>>,
}

impl TryFrom<MappedSampleJson> for MappedSample {
    type Error = Error;

    fn try_from(raw: MappedSampleJson) -> Result<Self> {
        MappedSample::new(raw.source, raw.image)
    }
}

impl From<MappedSample> for MappedSampleJson {
    fn from(m: MappedSample) -> Self {
        MappedSampleJson { source: m.source, image: m.image }
    }
}

impl MappedSample {
    pub fn new(source: PointSet, image: EmbeddingCoordinates) -> Result<Self> {
        if source.labels() != image.labels() {
            return Err(Error::InvalidPointSet("source and image labels differ".into()));
        }
        Ok(Self { source, image, pair_cache: None })
    }

    pub fn from_map(source: PointSet, map: &dyn EvaluableMap) -> Result<Self> {
        let image = map.realize(&source)?;
        Self::new(source, image)
    }

    /// Computes and stores the per-pair distances.
    pub fn with_pair_cache(mut self) -> Self {
        self.pair_cache = Some(self.compute_pairs());
        self
    }

    pub fn source(&self) -> &PointSet {
        &self.source
    }

    pub fn image(&self) -> &EmbeddingCoordinates {
        &self.image
    }

    pub fn len(&self) -> usize {
        self.source.len()
    }

    pub fn is_empty(&self) -> bool {
        self.source.is_empty()
    }

    /// Unordered pairs `i < j` in lexicographic order.
    pub fn pairs(&self) -> Vec<PairDistance> {
        match &self.pair_cache {
            Some(p) => p.clone(),
            None => self.compute_pairs(),
        }
    }

    fn compute_pairs(&self) -> Vec<PairDistance> {
        let n = self.len();
        (0..n)
            .into_par_iter()
            .flat_map_iter(|i| {
                (i + 1..n).map(move |j| PairDistance {
                    i,
                    j,
                    source: self.source.metric(i, j),
                    image: self.image.distance(i, j),
                })
            })
            .collect()
    }

    pub fn cache_is_consistent(&self) -> bool {
        match &self.pair_cache {
            None => true,
            Some(cache) => {
                let fresh = self.compute_pairs();
                cache.len() == fresh.len()
                    && cache.iter().zip(&fresh).all(|(a, b)| {
                        a.i == b.i
                            && a.j == b.j
                            && (a.source - b.source).abs() <= 1e-12
                            && (a.image - b.image).abs() <= 1e-12
                    })
            }
        }
    }

    /// Largest `‖T_i‖` deviation from 1.
    pub fn sphere_defect(&self) -> f64 {
        (0..self.image.len()).map(|i| (self.image.norm(i) - 1.0).abs()).fold(0.0, f64::max)
    }
}

/// Pairs sorted by source distance, with prefix maxima and suffix minima of
/// the image distance so that φ̂ and ω̂ can be read at any threshold.
#[derive(Debug, Clone)]
pub struct PairEnvelope {
    sources: Vec<f64>,
    prefix_max: Vec<f64>,
    suffix_min: Vec<f64>,
}

impl PairEnvelope {
    pub fn new(pairs: &[PairDistance]) -> Self {
        let mut sorted: Vec<(f64, f64)> = pairs.iter().map(|p| (p.source, p.image)).collect();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        let sources: Vec<f64> = sorted.iter().map(|p| p.0).collect();
        let mut prefix_max = Vec::with_capacity(sorted.len());
        let mut acc = 0.0_f64;
        for p in &sorted {
            acc = acc.max(p.1);
            prefix_max.push(acc);
        }
        let mut suffix_min = vec![f64::INFINITY; sorted.len()];
        let mut acc = f64::INFINITY;
        for (k, p) in sorted.iter().enumerate().rev() {
            acc = acc.min(p.1);
            suffix_min[k] = acc;
        }
        Self { sources, prefix_max, suffix_min }
    }

    pub fn from_sample(sample: &MappedSample) -> Self {
        Self::new(&sample.pairs())
    }

    /// `(φ̂(t), #pairs with d ≥ t)`.
    pub fn phi(&self, t: f64) -> (f64, usize) {
        let k = self.sources.partition_point(|&d| d < t);
        let count = self.sources.len() - k;
        (if count == 0 { f64::INFINITY } else { self.suffix_min[k] }, count)
    }

    /// `(ω̂(t), #pairs with d ≤ t)`.
    pub fn omega(&self, t: f64) -> (f64, usize) {
        let k = self.sources.partition_point(|&d| d <= t);
        (if k == 0 { 0.0 } else { self.prefix_max[k - 1] }, k)
    }

    /// Distinct source distances, ascending.
    pub fn realized_distances(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        for &d in &self.sources {
            if out.last() != Some(&d) {
                out.push(d);
            }
        }
        out
    }
}

/// Sampled graph of `t ↦ (φ̂(t), ω̂(t))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulusProfile {
    #[serde(rename = "t")]
    pub thresholds: Vec<f64>,
    #[serde(with = "inf_marker")]
    pub phi: Vec<f64>,
    pub omega: Vec<f64>,
    pub count_ge: Vec<usize>,
    pub count_le: Vec<usize>,
}

impl ModulusProfile {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,phi,omega,count_ge,count_le\n");
        for k in 0..self.thresholds.len() {
            writeln!(
                out,
                "{},{},{},{},{}",
                self.thresholds[k],
                inf_marker::format(self.phi[k]),
                self.omega[k],
                self.count_ge[k],
                self.count_le[k]
            )
            .unwrap();
        }
        out
    }

    pub fn is_monotone(&self) -> bool {
        self.phi.windows(2).all(|w| w[0] <= w[1]) && self.omega.windows(2).all(|w| w[0] <= w[1])
    }
}

fn check_thresholds(thresholds: &[f64]) -> Result<Vec<f64>> {
    if let Some(bad) = thresholds.iter().find(|t| !(**t > 0.0)) {
        return Err(Error::Precondition(format!("thresholds must be positive, got {bad}")));
    }
    let mut ts = thresholds.to_vec();
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    Ok(ts)
}

/// φ̂ and ω̂ at each threshold (sorted and deduplicated).
pub fn empirical_moduli(sample: &MappedSample, thresholds: &[f64]) -> Result<ModulusProfile> {
    if sample.len() < 2 {
        return Err(Error::Precondition("moduli need at least two points".into()));
    }
    let thresholds = check_thresholds(thresholds)?;
    Ok(profile_from_envelope(&PairEnvelope::from_sample(sample), thresholds))
}

pub(crate) fn profile_from_envelope(env: &PairEnvelope, thresholds: Vec<f64>) -> ModulusProfile {
    let (mut phi, mut omega, mut count_ge, mut count_le) = (vec![], vec![], vec![], vec![]);
    for &t in &thresholds {
        let (p, cg) = env.phi(t);
        let (o, cl) = env.omega(t);
        phi.push(p);
        omega.push(o);
        count_ge.push(cg);
        count_le.push(cl);
    }
    ModulusProfile { thresholds, phi, omega, count_ge, count_le }
}

/// The sample of `T_a(x) = T(a·x)` over the same source points.
pub fn rescale_source(sample: &MappedSample, a: f64, base_map: &dyn EvaluableMap) -> Result<MappedSample> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::Precondition(format!("rescale factor must be positive, got {a}")));
    }
    MappedSample::from_map(sample.source().clone(), &RescaledMap { base: base_map, a })
}

/// Both sides of `φ̂_{T_a,S}(t) = φ̂_{T,aS}(a^p t)` and the ω̂ analogue.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RescaleIdentity {
    pub a: f64,
    pub thresholds: Vec<f64>,
    #[serde(with = "inf_marker")]
    pub phi_rescaled_map: Vec<f64>,
    #[serde(with = "inf_marker")]
    pub phi_rescaled_set: Vec<f64>,
    pub omega_rescaled_map: Vec<f64>,
    pub omega_rescaled_set: Vec<f64>,
    /// Bitwise equality on every threshold.
    pub exact: bool,
}

/// Evaluates both sides from one realization of `T` on `aS`.
///
/// Equality is exact whenever `a^p` scales distances without rounding (for
/// instance `a` a power of two with `p = 1`).
pub fn rescale_identity(
    source: &PointSet,
    a: f64,
    base_map: &dyn EvaluableMap,
    thresholds: &[f64],
) -> Result<RescaleIdentity> {
    let thresholds = check_thresholds(thresholds)?;
    let scaled_source = source.scaled(a)?;
    let shared = base_map.realize(&scaled_source)?;
    let on_s = MappedSample::new(source.clone(), shared.clone())?;
    let on_as = MappedSample::new(scaled_source, shared)?;
    let ap = a.powf(source.space().p);
    let lhs = profile_from_envelope(&PairEnvelope::from_sample(&on_s), thresholds.clone());
    let scaled_t: Vec<f64> = thresholds.iter().map(|t| ap * t).collect();
    let rhs = profile_from_envelope(&PairEnvelope::from_sample(&on_as), scaled_t);
    let exact = lhs.phi.iter().zip(&rhs.phi).all(|(x, y)| x.to_bits() == y.to_bits())
        && lhs.omega.iter().zip(&rhs.omega).all(|(x, y)| x.to_bits() == y.to_bits());
    Ok(RescaleIdentity {
        a,
        thresholds,
        phi_rescaled_map: lhs.phi,
        phi_rescaled_set: rhs.phi,
        omega_rescaled_map: lhs.omega,
        omega_rescaled_set: rhs.omega,
        exact,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{ConstantMap, GaussianSphereMap, IdentityMap};
    use crate::spaces::{sample_grid, QuasiNormedSpace};

    fn line(xs: &[f64]) -> PointSet {
        PointSet::from_points(QuasiNormedSpace::lq(1, 1.0).unwrap(), xs.iter().map(|&x| vec![x]).collect()).unwrap()
    }

    #[test]
    fn identity_profile_by_enumeration() {
        // pairs of {0,1,3}: (0,1)=1, (0,3)=3, (1,3)=2
        let s = MappedSample::from_map(line(&[0.0, 1.0, 3.0]), &IdentityMap).unwrap();
        let prof = empirical_moduli(&s, &[2.0, 5.0]).unwrap();
        assert_eq!(prof.phi, vec![2.0, f64::INFINITY]);
        assert_eq!(prof.omega, vec![2.0, 3.0]);
        assert_eq!(prof.count_ge, vec![2, 0]);
        assert_eq!(prof.count_le, vec![2, 3]);
    }

    #[test]
    fn constant_map_profile() {
        let s = MappedSample::from_map(line(&[0.0, 1.0, 3.0]), &ConstantMap).unwrap();
        let prof = empirical_moduli(&s, &[0.5, 1.0, 3.0]).unwrap();
        assert_eq!(prof.phi, vec![0.0, 0.0, 0.0]);
        assert_eq!(prof.omega, vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn preconditions() {
        let s = MappedSample::from_map(line(&[0.0]), &IdentityMap).unwrap();
        assert!(empirical_moduli(&s, &[1.0]).is_err());
        let s = MappedSample::from_map(line(&[0.0, 1.0]), &IdentityMap).unwrap();
        assert!(empirical_moduli(&s, &[0.0]).is_err());
    }

    #[test]
    fn csv_and_json_markers() {
        let s = MappedSample::from_map(line(&[0.0, 1.0]), &IdentityMap).unwrap();
        let prof = empirical_moduli(&s, &[1.0, 2.0]).unwrap();
        assert_eq!(prof.to_csv(), "t,phi,omega,count_ge,count_le\n1,1,1,1,1\n2,inf,1,0,1\n");
        let v = serde_json::to_value(&prof).unwrap();
        assert_eq!(v["phi"][1], "inf");
        let back: ModulusProfile = serde_json::from_value(v).unwrap();
        assert_eq!(back, prof);
    }

    #[test]
    fn unit_rescale_is_identical() {
        let grid = sample_grid(&QuasiNormedSpace::euclidean(1), 3, 1.0).unwrap();
        let base = MappedSample::from_map(grid, &GaussianSphereMap::default()).unwrap();
        let same = rescale_source(&base, 1.0, &GaussianSphereMap::default()).unwrap();
        let ts = [0.5, 1.0, 2.0, 4.0];
        assert_eq!(empirical_moduli(&base, &ts).unwrap(), empirical_moduli(&same, &ts).unwrap());
    }

    #[test]
    fn small_scale_gaussian_omega_vanishes() {
        let grid = sample_grid(&QuasiNormedSpace::euclidean(1), 5, 1.0).unwrap();
        let base = MappedSample::from_map(grid, &GaussianSphereMap::default()).unwrap();
        let r = 3.0;
        for a in [0.5, 0.1, 0.01] {
            let s = rescale_source(&base, a, &GaussianSphereMap::default()).unwrap();
            let omega = empirical_moduli(&s, &[r]).unwrap().omega[0];
            let closed = GaussianSphereMap::image_distance(a * r);
            assert!((omega - closed).abs() < 1e-8, "a={a}: {omega} vs {closed}");
        }
    }

    #[test]
    fn pair_cache_consistency() {
        let s = MappedSample::from_map(line(&[0.0, 1.0, 3.0]), &IdentityMap).unwrap().with_pair_cache();
        assert!(s.cache_is_consistent());
        assert_eq!(s.pairs().len(), 3);
    }
}

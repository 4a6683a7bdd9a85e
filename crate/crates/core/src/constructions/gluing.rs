use serde::{Deserialize, Serialize};

use crate::embeddings::EmbeddingCoordinates;
use crate::error::{Error, Result};
use crate::maps::{EvaluableMap, RescaledMap};
use crate::moduli::{MappedSample, PairEnvelope};
use crate::report::Outcome;
use crate::spaces::PointSet;

const UNIT_NORM_TOL: f64 = 1e-10;

/// One scale `T_n = T_{a_n}` of a family, realized on the sample.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScaleEntry {
    pub n: u32,
    /// Rescale factor of the base map.
    pub a: f64,
    pub map: MappedSample,
    pub s: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ScaleFamilyJson {
    scales: Vec<ScaleEntry>,
    delta: f64,
    n_max: u32,
}

/// Sphere-valued maps `T_1, …, T_{n_max}` on a common sample with
/// `ω̂_{T_n}(√n) ≤ 2^{−n}`, `φ̂_{T_n}(s_n) ≥ δ/2` and `s_1 < s_2 < …`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "ScaleFamilyJson", into = "ScaleFamilyJson")]
pub struct ScaleFamily {
    scales: Vec<ScaleEntry>,
    delta: f64,
    n_max: u32,
}

impl TryFrom<ScaleFamilyJson> for ScaleFamily {
    type Error = Error;

    fn try_from(raw: ScaleFamilyJson) -> Result<Self> {
        ScaleFamily::new(raw.scales, raw.delta, raw.n_max)
    }
}

impl From<ScaleFamily> for ScaleFamilyJson {
    fn from(f: ScaleFamily) -> Self {
        ScaleFamilyJson { scales: f.scales, delta: f.delta, n_max: f.n_max }
    }
}

impl ScaleFamily {
    /// Builds and validates a family.
    pub fn new(scales: Vec<ScaleEntry>, delta: f64, n_max: u32) -> Result<Self> {
        let family = Self { scales, delta, n_max };
        let problems = family.violations();
        if problems.is_empty() {
            Ok(family)
        } else {
            Err(Error::ScaleFamily(problems.join("; ")))
        }
    }

    pub fn scales(&self) -> &[ScaleEntry] {
        &self.scales
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn n_max(&self) -> u32 {
        self.n_max
    }

    pub fn thresholds(&self) -> Vec<f64> {
        self.scales.iter().map(|e| e.s).collect()
    }

    /// Every broken invariant, re-checked from the stored samples.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.delta > 0.0) || !self.delta.is_finite() {
            out.push(format!("delta must be positive, got {}", self.delta));
        }
        if self.n_max == 0 || self.scales.len() != self.n_max as usize {
            out.push(format!("expected {} scales, found {}", self.n_max, self.scales.len()));
        }
        let source = self.scales.first().map(|e| e.map.source());
        for (k, e) in self.scales.iter().enumerate() {
            let n = k as u32 + 1;
            if e.n != n {
                out.push(format!("scale {k} is labelled n = {}", e.n));
            }
            if Some(e.map.source()) != source {
                out.push(format!("scale {n} lives on a different sample"));
            }
            if !(e.s > 0.0) {
                out.push(format!("s_{n} = {} is not positive", e.s));
            }
            if k > 0 && !(e.s > self.scales[k - 1].s) {
                out.push(format!("s_{n} = {} does not exceed s_{} = {}", e.s, n - 1, self.scales[k - 1].s));
            }
            let defect = e.map.sphere_defect();
            if defect > UNIT_NORM_TOL {
                out.push(format!("scale {n} leaves the unit sphere by {defect:e}"));
            }
            let env = PairEnvelope::from_sample(&e.map);
            let (omega, _) = env.omega((n as f64).sqrt());
            let target = 0.5f64.powi(n as i32);
            if omega > target {
                out.push(format!("scale {n}: expansion {omega} at √{n} exceeds {target}"));
            }
            let (phi, _) = env.phi(e.s);
            if phi < self.delta / 2.0 {
                out.push(format!("scale {n}: compression {phi} at s_{n} is below δ/2 = {}", self.delta / 2.0));
            }
        }
        out
    }
}

/// `ρ₁(t) = (δ/2)·√(n−1)` on `[s_{n−1}, s_n)` with `s_0 = 0`, continuing
/// with `(δ/2)·√n_max` past `s_{n_max}`; `ρ₂(t) = √(4t² + 1/3)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepFunctionEnvelope {
    /// `s_0 = 0, s_1, …, s_{n_max}`
    pub breakpoints: Vec<f64>,
    /// Value on `[breakpoints[k], breakpoints[k+1])`, the last one unbounded.
    pub values: Vec<f64>,
    pub delta: f64,
}

impl StepFunctionEnvelope {
    pub fn new(delta: f64, thresholds: &[f64]) -> Self {
        let mut breakpoints = vec![0.0];
        breakpoints.extend_from_slice(thresholds);
        let values = (0..breakpoints.len()).map(|k| delta / 2.0 * (k as f64).sqrt()).collect();
        Self { breakpoints, values, delta }
    }

    /// The `N` with `s_{N−1} ≤ t < s_N`, or `n_max + 1` past the last breakpoint.
    pub fn index(&self, t: f64) -> usize {
        self.breakpoints.partition_point(|&s| s <= t).max(1)
    }

    pub fn rho1(&self, t: f64) -> f64 {
        self.values[self.index(t) - 1]
    }

    pub fn rho2(t: f64) -> f64 {
        (4.0 * t * t + 1.0 / 3.0).sqrt()
    }

    pub fn is_nondecreasing(&self) -> bool {
        self.breakpoints.windows(2).all(|w| w[0] < w[1]) && self.values.windows(2).all(|w| w[0] <= w[1])
    }
}

fn realize_scale(base: &dyn EvaluableMap, sample: &PointSet, a: f64) -> Result<MappedSample> {
    MappedSample::from_map(sample.clone(), &RescaledMap { base, a })
}

fn omega_at(base: &dyn EvaluableMap, sample: &PointSet, a: f64, t: f64) -> Result<(f64, MappedSample)> {
    let mapped = realize_scale(base, sample, a)?;
    let omega = PairEnvelope::from_sample(&mapped).omega(t).0;
    Ok((omega, mapped))
}

/// Largest `a` (to bisection precision) with `ω̂_{T_a}(t) ≤ target`.
fn largest_feasible_scale(base: &dyn EvaluableMap, sample: &PointSet, t: f64, target: f64) -> Result<(f64, MappedSample)> {
    let (omega, mapped) = omega_at(base, sample, 1.0, t)?;
    let (mut lo, mut hi);
    let mut best;
    if omega <= target {
        lo = 1.0;
        best = mapped;
        hi = f64::INFINITY;
        let mut a = 1.0;
        for _ in 0..60 {
            a *= 2.0;
            let (omega, mapped) = omega_at(base, sample, a, t)?;
            if omega <= target {
                lo = a;
                best = mapped;
            } else {
                hi = a;
                break;
            }
        }
        if hi.is_infinite() {
            return Ok((lo, best));
        }
    } else {
        hi = 1.0;
        let mut a = 1.0;
        let mut found = None;
        let mut achieved = omega;
        for _ in 0..60 {
            a /= 2.0;
            let (omega, mapped) = omega_at(base, sample, a, t)?;
            if omega <= target {
                found = Some(mapped);
                break;
            }
            hi = a;
            achieved = omega;
        }
        match found {
            Some(m) => {
                lo = a;
                best = m;
            }
            None => {
                return Err(Error::ScaleFamily(format!(
                    "expansion at {t} stays at {achieved} > {target} down to a = {a:e}"
                )))
            }
        }
    }
    for _ in 0..60 {
        if hi / lo <= 1.0 + 1e-12 {
            break;
        }
        let mid = (lo.ln() + 0.5 * (hi.ln() - lo.ln())).exp();
        let (omega, mapped) = omega_at(base, sample, mid, t)?;
        if omega <= target {
            lo = mid;
            best = mapped;
        } else {
            hi = mid;
        }
    }
    Ok((lo, best))
}

/// Rescales a sphere-valued base map to `T_n = T_{a_n}` with
/// `ω̂_{T_n}(√n) ≤ 2^{−n}` for `n ≤ n_max`.
///
/// `δ = delta_fraction · φ̂_T(diam)`, the compression of the base map at the
/// largest sample distance, and `s_n` is the smallest sample distance with
/// `φ̂_{T_n}(s_n) ≥ δ/2`, bumped up where needed to keep `s_n` strictly
/// increasing. The result is re-validated before it is returned.
pub fn build_scale_family(
    base: &dyn EvaluableMap,
    sample: &PointSet,
    delta_fraction: f64,
    n_max: u32,
) -> Result<ScaleFamily> {
    if n_max == 0 {
        return Err(Error::Precondition("a scale family needs n_max ≥ 1".into()));
    }
    if !(delta_fraction > 0.0 && delta_fraction <= 1.0) {
        return Err(Error::Precondition(format!("delta fraction must lie in (0, 1], got {delta_fraction}")));
    }
    if sample.len() < 2 {
        return Err(Error::Precondition("a scale family needs at least two sample points".into()));
    }
    let base_sample = MappedSample::from_map(sample.clone(), base)?;
    if base_sample.sphere_defect() > UNIT_NORM_TOL {
        return Err(Error::Precondition(format!("base map `{}` is not sphere valued", base.name())));
    }
    let base_env = PairEnvelope::from_sample(&base_sample);
    let probes = base_env.realized_distances();
    let largest = *probes.last().expect("two distinct points give one distance");
    let delta = delta_fraction * base_env.phi(largest).0;
    if !(delta > 0.0) {
        return Err(Error::Precondition(format!(
            "compression of `{}` vanishes at the largest sample distance {largest}",
            base.name()
        )));
    }

    let mut scales = Vec::with_capacity(n_max as usize);
    let mut previous = 0.0;
    for n in 1..=n_max {
        let target = 0.5f64.powi(n as i32);
        let (a, mapped) = largest_feasible_scale(base, sample, (n as f64).sqrt(), target)?;
        let env = PairEnvelope::from_sample(&mapped);
        let s = probes
            .iter()
            .copied()
            .find(|&t| t > previous && env.phi(t).0 >= delta / 2.0)
            .ok_or_else(|| {
                Error::ScaleFamily(format!(
                    "no sample distance up to {largest} reaches compression δ/2 = {} at scale {n} (a = {a:e})",
                    delta / 2.0
                ))
            })?;
        previous = s;
        scales.push(ScaleEntry { n, a, map: mapped, s });
    }
    ScaleFamily::new(scales, delta, n_max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlueReport {
    pub pairs: usize,
    /// `4^{−n_max}/3`
    pub epsilon_trunc: f64,
    /// Pairs breaking `‖T(x) − T(y)‖² ≤ 4d² + 1/3 + ε_trunc`.
    pub upper_violations: usize,
    /// Pairs breaking `‖T(x) − T(y)‖² ≥ (δ/2)²(N − 1)`.
    pub lower_violations: usize,
    /// Pairs breaking `ρ₁(d) ≤ ‖T(x) − T(y)‖`.
    pub envelope_violations: usize,
    /// Smallest `upper bound − ‖T(x) − T(y)‖²`.
    pub min_upper_slack: f64,
    /// Smallest `‖T(x) − T(y)‖² − (δ/2)²(N − 1)`.
    pub min_lower_slack: f64,
    /// Largest relative gap between `‖T(x) − T(y)‖²` and `Σ_n ‖T_n(x) − T_n(y)‖²`.
    pub sum_identity_error: f64,
    pub outcome: Outcome,
}

#[derive(Debug, Clone)]
pub struct Glued {
    pub embedding: EmbeddingCoordinates,
    pub envelope: StepFunctionEnvelope,
    pub report: GlueReport,
}

/// `T(x) = (T_n(x) − T_n(x_0))_{n ≤ n_max}` with both sandwich bounds checked
/// on every sample pair.
pub fn dg_glue(family: &ScaleFamily, sample: &PointSet, basepoint: &str) -> Result<Glued> {
    let problems = family.violations();
    if !problems.is_empty() {
        return Err(Error::ScaleFamily(problems.join("; ")));
    }
    let first = family.scales[0].map.source();
    if first.points() != sample.points() || first.labels() != sample.labels() {
        return Err(Error::Precondition("family was built on a different sample".into()));
    }
    let b = sample.require_label(basepoint)?;
    let n = sample.len();
    let mut vectors = vec![Vec::new(); n];
    for e in &family.scales {
        let img = e.map.image();
        let origin = img.vector(b);
        for (i, v) in vectors.iter_mut().enumerate() {
            v.extend(img.vector(i).iter().zip(origin).map(|(x, o)| x - o));
        }
    }
    let dim = vectors.first().map_or(0, Vec::len);
    let embedding = EmbeddingCoordinates::new(sample.labels().to_vec(), dim, vectors)?;
    let envelope = StepFunctionEnvelope::new(family.delta, &family.thresholds());

    let epsilon_trunc = 0.25f64.powi(family.n_max as i32) / 3.0;
    let half = family.delta / 2.0;
    let mut report = GlueReport {
        pairs: 0,
        epsilon_trunc,
        upper_violations: 0,
        lower_violations: 0,
        envelope_violations: 0,
        min_upper_slack: f64::INFINITY,
        min_lower_slack: f64::INFINITY,
        sum_identity_error: 0.0,
        outcome: Outcome::Pass,
    };
    for i in 0..n {
        for j in i + 1..n {
            let d = sample.metric(i, j);
            let glued = embedding.distance_sq(i, j);
            let blocks: f64 = family.scales.iter().map(|e| e.map.image().distance_sq(i, j)).sum();
            let rel = 1e-12 * (1.0 + blocks);
            report.sum_identity_error = report.sum_identity_error.max((glued - blocks).abs() / (1.0 + blocks));

            let upper = 4.0 * d * d + 1.0 / 3.0 + epsilon_trunc;
            let big_n = envelope.index(d);
            let lower = half * half * (big_n - 1) as f64;
            report.pairs += 1;
            report.min_upper_slack = report.min_upper_slack.min(upper - glued);
            report.min_lower_slack = report.min_lower_slack.min(glued - lower);
            if glued > upper + rel {
                report.upper_violations += 1;
            }
            if glued < lower - rel {
                report.lower_violations += 1;
            }
            let rho1 = envelope.rho1(d);
            if rho1 * rho1 > glued + rel {
                report.envelope_violations += 1;
            }
        }
    }
    report.outcome = Outcome::from_bool(
        report.upper_violations == 0
            && report.lower_violations == 0
            && report.envelope_violations == 0
            && report.sum_identity_error <= 1e-12,
    );
    Ok(Glued { embedding, envelope, report })
}

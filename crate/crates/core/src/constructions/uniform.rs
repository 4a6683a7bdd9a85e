use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embeddings::{embedding_from_nd, squared_distance_kernel, EmbeddingCoordinates};
use crate::error::{Error, Result};
use crate::kernels::{
    default_tolerance, is_negative_definite, kernel_from_function, snowflake_power, DefinitenessVerdict,
    InvariantFunctionTable, KernelMatrix,
};
use crate::maps::EvaluableMap;
use crate::moduli::{empirical_moduli, rho_f_modulus, MappedSample, ModulusProfile, PairEnvelope};
use crate::report::{Certificate, Outcome};
use crate::spaces::{add, PointSet, QuasiNormedSpace};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainBoundReport {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// `‖x − y‖` (the quasi-norm, not its p-th power)
    pub quasi_distance: f64,
    pub n: u32,
    /// `‖T(x_i) − T(x_{i−1})‖`
    pub links: Vec<f64>,
    /// `‖x_i − x_{i−1}‖`, each at most 1
    pub steps: Vec<f64>,
    pub image_distance: f64,
    pub chain_sum: f64,
    pub rho2_at_1: f64,
    /// `2·ρ₂(1)·‖x − y‖`
    pub bound: f64,
    pub outcome: Outcome,
}

/// Walks `x_i = x + i(y − x)/n` with `n − 1 < ‖x − y‖ ≤ n` and checks
/// `‖T(x) − T(y)‖ ≤ Σ links ≤ n·ρ₂(1) < 2·ρ₂(1)·‖x − y‖`.
///
/// `rho2_at_1` must bound `‖T(u) − T(v)‖` whenever `‖u − v‖ ≤ 1`; a link
/// exceeding it fails the check.
pub fn chain_bound_check(
    map: &dyn EvaluableMap,
    space: &QuasiNormedSpace,
    x: &[f64],
    y: &[f64],
    rho2_at_1: f64,
) -> Result<ChainBoundReport> {
    space.check_dim(x)?;
    space.check_dim(y)?;
    let diff: Vec<f64> = y.iter().zip(x).map(|(b, a)| b - a).collect();
    let quasi_distance = space.quasi_norm(&diff)?;
    if quasi_distance < 1.0 {
        return Err(Error::Precondition(format!(
            "chain bound needs ‖x − y‖ ≥ 1, got {quasi_distance}"
        )));
    }
    let n = quasi_distance.ceil() as u32;
    let mut chain: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let f = i as f64 / n as f64;
            x.iter().zip(&diff).map(|(a, d)| a + f * d).collect()
        })
        .collect();
    chain.push(y.to_vec());
    let domain = PointSet::from_points(*space, chain.clone())?;
    if domain.len() != chain.len() {
        return Err(Error::Precondition("chain points collapsed under rounding".into()));
    }
    let sq = map.squared_distances(&domain)?;
    let nn = n as usize;
    let links: Vec<f64> = (1..=nn).map(|i| sq.get(i, i - 1).max(0.0).sqrt()).collect();
    let steps = (1..=nn)
        .map(|i| {
            let step: Vec<f64> = chain[i].iter().zip(&chain[i - 1]).map(|(b, a)| b - a).collect();
            space.quasi_norm(&step)
        })
        .collect::<Result<Vec<f64>>>()?;
    let image_distance = sq.get(0, nn).max(0.0).sqrt();
    let chain_sum: f64 = links.iter().sum();
    let bound = 2.0 * rho2_at_1 * quasi_distance;
    let slack = 1e-12 * (1.0 + chain_sum);
    let ok = image_distance <= chain_sum + slack
        && steps.iter().all(|&s| s <= 1.0 + 1e-12)
        && links.iter().all(|&l| l <= rho2_at_1 + 1e-12 * (1.0 + rho2_at_1))
        && chain_sum <= n as f64 * rho2_at_1 + slack
        && (n as f64) < 2.0 * quasi_distance;
    Ok(ChainBoundReport {
        x: x.to_vec(),
        y: y.to_vec(),
        quasi_distance,
        n,
        links,
        steps,
        image_distance,
        chain_sum,
        rho2_at_1,
        bound,
        outcome: Outcome::from_bool(ok),
    })
}

/// Realizes `‖T_r(x) − T_r(y)‖ = ‖T(x) − T(y)‖^r` from the squared image
/// distances of `T`.
pub fn snowflake_map(image_kernel: &KernelMatrix, r: f64) -> Result<EmbeddingCoordinates> {
    if !(r > 0.0 && r <= 1.0) {
        return Err(Error::Precondition(format!("snowflake exponent must lie in (0, 1], got {r}")));
    }
    if image_kernel.is_empty() {
        return EmbeddingCoordinates::new(vec![], 0, vec![]);
    }
    let powered = if r == 1.0 { image_kernel.clone() } else { snowflake_power(image_kernel, r)? };
    let base = powered.labels()[0].clone();
    embedding_from_nd(&powered, &base, default_tolerance(&powered))
}

/// `x ↦ T(x)` with squared distances `scale²·‖T(x) − T(y)‖^{2r}`.
pub struct SnowflakedMap<'a> {
    pub base: &'a dyn EvaluableMap,
    pub r: f64,
    pub scale: f64,
}

impl EvaluableMap for SnowflakedMap<'_> {
    fn name(&self) -> String {
        format!("{}^{}", self.base.name(), self.r)
    }

    fn realize(&self, domain: &PointSet) -> Result<EmbeddingCoordinates> {
        let k = self.squared_distances(domain)?;
        if k.is_empty() {
            return EmbeddingCoordinates::new(vec![], 0, vec![]);
        }
        let base = k.labels()[0].clone();
        embedding_from_nd(&k, &base, default_tolerance(&k))
    }

    fn squared_distances(&self, domain: &PointSet) -> Result<KernelMatrix> {
        let s2 = self.scale * self.scale;
        self.base.squared_distances(domain)?.map(|v| s2 * v.max(0.0).powf(self.r))
    }

    fn lipschitz_constant(&self, space: &QuasiNormedSpace) -> Option<f64> {
        (self.r == 1.0).then(|| self.base.lipschitz_constant(space).map(|c| c * self.scale)).flatten()
    }
}

/// A window average together with how far the per-window terms spread.
#[derive(Debug, Clone)]
pub struct WindowAverage {
    pub table: InvariantFunctionTable,
    /// Largest `max_z − min_z` of the averaged terms over all `x`; zero when
    /// the map's kernel is translation invariant on the window.
    pub spread: f64,
    pub window_size: usize,
    pub domain_size: usize,
}

/// `f̂(x) = (1/2|W|) Σ_{z∈W} (‖T(z+x) − T(z)‖² + ‖T(z−x) − T(z)‖²)` on the
/// difference set of `sample`.
///
/// Averaging both `z + x` and `z − x` makes `f̂` exactly even for any
/// negation-closed window.
pub fn translation_average(map: &dyn EvaluableMap, sample: &PointSet, window: &PointSet) -> Result<InvariantFunctionTable> {
    Ok(translation_average_detailed(map, sample, window)?.table)
}

pub fn translation_average_detailed(
    map: &dyn EvaluableMap,
    sample: &PointSet,
    window: &PointSet,
) -> Result<WindowAverage> {
    if sample.space() != window.space() {
        return Err(Error::Precondition("sample and window live in different spaces".into()));
    }
    if window.is_empty() || !window.is_negation_closed() {
        return Err(Error::Precondition("window must be nonempty and closed under negation".into()));
    }
    let support = sample.differences();
    let domain = window.extended(
        window
            .points()
            .iter()
            .flat_map(|z| support.points().iter().map(move |x| add(z, x))),
    );
    let k = map.squared_distances(&domain)?;
    let w = window.len();
    let rows: Vec<(f64, f64)> = (0..support.len())
        .into_par_iter()
        .map(|xi| {
            let x = support.point(xi);
            let neg: Vec<f64> = x.iter().map(|v| -v).collect();
            let mut sum = 0.0;
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for zi in 0..w {
                let z = window.point(zi);
                let plus = domain.position(&add(z, x)).expect("domain holds z + x");
                let minus = domain.position(&add(z, &neg)).expect("domain holds z − x");
                let term = k.get(plus, zi) + k.get(minus, zi);
                lo = lo.min(term);
                hi = hi.max(term);
                sum += term;
            }
            (sum / (2 * w) as f64, hi - lo)
        })
        .collect();
    let values: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let spread = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    Ok(WindowAverage {
        table: InvariantFunctionTable::new(support, values)?,
        spread,
        window_size: w,
        domain_size: domain.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorstCase {
    pub x: String,
    pub y: String,
    pub value: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub a: f64,
    pub p: f64,
    pub tolerance: f64,
    /// `|f̂(x) − f̂(y)| ≤ ((‖x‖^p)^a + (‖y‖^p)^a)·(‖x−y‖^p)^a` on all support pairs
    pub continuity_ok: bool,
    pub worst_continuity: Option<WorstCase>,
    /// `f̂(x) ≤ (‖x‖^p)^{2a}`
    pub upper_ok: bool,
    pub worst_upper: Option<WorstCase>,
    /// `max f̂(x) / (‖x‖^p)^{2a}`; above 1 means `f̂` needs this normalization.
    pub normalization_factor: f64,
    pub nd_verdict: DefinitenessVerdict,
    pub certificate: Option<Certificate>,
    pub outcome: Outcome,
}

/// Checks the continuity estimate, the upper sandwich bound and the
/// (approximate) negative definiteness of an averaged function.
pub fn averaged_kernel_quality(f_hat: &InvariantFunctionTable, sample: &PointSet, a: f64, tol: f64) -> Result<QualityReport> {
    let support = f_hat.support();
    let p = f_hat.space().p;
    let n = support.len();
    let norms: Vec<f64> = (0..n).map(|i| support.p_norm(i).powf(a)).collect();

    let continuity: Vec<Option<WorstCase>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut worst: Option<WorstCase> = None;
            for j in 0..n {
                let lhs = (f_hat.value(i) - f_hat.value(j)).abs();
                let rhs = (norms[i] + norms[j]) * support.metric(i, j).powf(a);
                let excess = lhs - rhs;
                if worst.as_ref().is_none_or(|w| excess > w.value - w.bound) {
                    worst = Some(WorstCase {
                        x: support.label(i).into(),
                        y: support.label(j).into(),
                        value: lhs,
                        bound: rhs,
                    });
                }
            }
            worst
        })
        .collect();
    let worst_continuity = continuity
        .into_iter()
        .flatten()
        .max_by(|a, b| (a.value - a.bound).total_cmp(&(b.value - b.bound)));
    let continuity_ok = worst_continuity.as_ref().is_none_or(|w| w.value <= w.bound + tol);

    let mut worst_upper: Option<WorstCase> = None;
    let mut normalization_factor = 0.0_f64;
    for i in 0..n {
        let bound = norms[i] * norms[i];
        let v = f_hat.value(i);
        if bound > 0.0 {
            normalization_factor = normalization_factor.max(v / bound);
        }
        if worst_upper.as_ref().is_none_or(|w| v - bound > w.value - w.bound) {
            worst_upper = Some(WorstCase { x: support.label(i).into(), y: String::new(), value: v, bound });
        }
    }
    let upper_ok = worst_upper.as_ref().is_none_or(|w| w.value <= w.bound + tol);

    let kernel = kernel_from_function(f_hat, sample)?;
    let nd_verdict = is_negative_definite(&kernel, tol)?;
    let certificate = Certificate::from_verdict("averaged kernel", &kernel, &nd_verdict);
    let outcome = Outcome::from_bool(continuity_ok && upper_ok && nd_verdict.passed);
    Ok(QualityReport {
        a,
        p,
        tolerance: tol,
        continuity_ok,
        worst_continuity,
        upper_ok,
        worst_upper,
        normalization_factor,
        nd_verdict,
        certificate,
        outcome,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssemblyReport {
    /// Largest `|‖S(x) − S(y)‖² − f̂(x − y)|` over sample pairs.
    pub identity_error: f64,
    pub identity_ok: bool,
    /// `φ̂_S(t)² ≥ ρ̂_f̂(t)` at every threshold.
    pub compression_ok: bool,
    pub rho: Vec<f64>,
    /// `φ̂_S(t) > 0` at every threshold.
    pub phi_positive: bool,
    pub outcome: Outcome,
}

#[derive(Debug, Clone)]
pub struct Assembly {
    pub embedding: EmbeddingCoordinates,
    pub profile: ModulusProfile,
    pub report: AssemblyReport,
}

/// Realizes `‖S(x) − S(y)‖² = f̂(x − y)` on the sample and profiles `S` at
/// every realized sample distance.
pub fn strong_uniform_assembly(f_hat: &InvariantFunctionTable, sample: &PointSet, tol: f64) -> Result<Assembly> {
    if f_hat.origin_value() != 0.0 {
        return Err(Error::Precondition(format!(
            "assembly needs f̂(0) = 0, found {}",
            f_hat.origin_value()
        )));
    }
    if sample.len() < 2 {
        return Err(Error::Precondition("assembly needs at least two sample points".into()));
    }
    let kernel = kernel_from_function(f_hat, sample)?;
    let embedding = embedding_from_nd(&kernel, sample.label(0), tol)?;
    let realized = squared_distance_kernel(&embedding);
    let identity_error = (realized.entries() - kernel.entries()).abs().max();
    let scale = f_hat.max_value().abs();
    let identity_ok = identity_error <= 1e-8 * scale;

    let mapped = MappedSample::new(sample.clone(), embedding.clone())?;
    let thresholds: Vec<f64> = PairEnvelope::from_sample(&mapped)
        .realized_distances()
        .into_iter()
        .filter(|&t| t > 0.0)
        .collect();
    let profile = empirical_moduli(&mapped, &thresholds)?;
    let rho = rho_f_modulus(f_hat, &profile.thresholds);
    let compression_ok = profile.phi.iter().zip(&rho).all(|(&phi, &r)| phi * phi >= r - 1e-8 * scale);
    let phi_positive = profile.phi.iter().all(|&phi| phi > 0.0);
    let outcome = Outcome::from_bool(identity_ok && compression_ok && phi_positive);
    Ok(Assembly {
        embedding,
        profile,
        report: AssemblyReport { identity_error, identity_ok, compression_ok, rho, phi_positive, outcome },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{ConstantMap, GaussianSphereMap, IdentityMap};
    use crate::spaces::sample_grid;

    fn line() -> QuasiNormedSpace {
        QuasiNormedSpace::lq(1, 1.0).unwrap()
    }

    fn pts(xs: &[f64]) -> PointSet {
        PointSet::from_points(line(), xs.iter().map(|&x| vec![x]).collect()).unwrap()
    }

    #[test]
    fn chain_on_identity() {
        let r = chain_bound_check(&IdentityMap, &line(), &[0.0], &[2.5], 1.0).unwrap();
        assert_eq!(r.n, 3);
        assert_eq!(r.bound, 5.0);
        assert!((r.image_distance - 2.5).abs() < 1e-15);
        assert_eq!(r.outcome, Outcome::Pass);
    }

    #[test]
    fn chain_on_gaussian() {
        let r = chain_bound_check(&GaussianSphereMap::default(), &line(), &[0.0], &[3.0], 1.125).unwrap();
        let link = (2.0 * (1.0 - (-1.0f64).exp())).sqrt();
        assert_eq!(r.n, 3);
        for l in &r.links {
            assert!((l - link).abs() < 1e-15);
        }
        assert!(r.chain_sum < 2.0 * 1.125 * 3.0);
        assert_eq!(r.outcome, Outcome::Pass);
    }

    #[test]
    fn chain_single_link_and_precondition() {
        let r = chain_bound_check(&IdentityMap, &line(), &[1.0], &[0.0], 1.0).unwrap();
        assert_eq!((r.n, r.links.len()), (1, 1));
        assert!(chain_bound_check(&IdentityMap, &line(), &[0.0], &[0.5], 1.0).is_err());
    }

    #[test]
    fn chain_rejects_understated_constant() {
        let r = chain_bound_check(&IdentityMap, &line(), &[0.0], &[3.0], 0.5).unwrap();
        assert_eq!(r.outcome, Outcome::Fail);
    }

    #[test]
    fn snowflake_map_examples() {
        let k = KernelMatrix::unlabeled(&[vec![0.0, 16.0], vec![16.0, 0.0]]).unwrap();
        let t = snowflake_map(&k, 0.5).unwrap();
        assert!((t.distance(0, 1) - 2.0).abs() < 1e-12);
        let same = snowflake_map(&k, 1.0).unwrap();
        assert!((same.distance(0, 1) - 4.0).abs() < 1e-12);

        let line3 = IdentityMap.squared_distances(&pts(&[0.0, 1.0, 2.0])).unwrap();
        let t = snowflake_map(&line3, 0.5).unwrap();
        for (i, j, d) in [(0, 1, 1.0), (0, 2, 2.0), (1, 2, 1.0)] {
            assert!((t.distance_sq(i, j) - d).abs() < 1e-12);
        }
    }

    #[test]
    fn gaussian_average_is_closed_form_for_any_window() {
        let sample = sample_grid(&line(), 3, 1.0).unwrap();
        let map = GaussianSphereMap::default();
        for window in [pts(&[0.0]), pts(&[-1.0, 1.0]), pts(&[-4.0, -2.0, 2.0, 4.0])] {
            let f = translation_average(&map, &sample, &window).unwrap();
            for i in 0..f.support().len() {
                let x = f.support().point(i)[0];
                assert!((f.value(i) - 2.0 * (1.0 - (-x * x).exp())).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn average_of_constant_and_origin() {
        let sample = pts(&[0.0, 1.0, 3.0]);
        let f = translation_average(&ConstantMap, &sample, &pts(&[-1.0, 1.0])).unwrap();
        assert!(f.values().iter().all(|&v| v == 0.0));
        let g = translation_average(&IdentityMap, &sample, &pts(&[-1.0, 1.0])).unwrap();
        assert_eq!(g.origin_value(), 0.0);
    }

    #[test]
    fn average_rejects_open_window() {
        let sample = pts(&[0.0, 1.0]);
        assert!(translation_average(&IdentityMap, &sample, &pts(&[1.0])).is_err());
    }

    #[test]
    fn quality_flags_gaussian_normalization() {
        let sample = sample_grid(&line(), 3, 1.0).unwrap();
        let f = translation_average(&GaussianSphereMap::default(), &sample, &pts(&[0.0])).unwrap();
        let raw = averaged_kernel_quality(&f, &sample, 1.0, 1e-8).unwrap();
        assert!(!raw.upper_ok);
        assert!(raw.normalization_factor > 1.0 && raw.normalization_factor <= 2.0);
        let halved = f.map(|v| v / 2.0).unwrap();
        let fixed = averaged_kernel_quality(&halved, &sample, 1.0, 1e-8).unwrap();
        assert_eq!(fixed.outcome, Outcome::Pass);
    }

    #[test]
    fn quality_of_zero_function() {
        let sample = pts(&[0.0, 1.0, 2.0]);
        let f = InvariantFunctionTable::from_fn(sample.differences(), |_| 0.0).unwrap();
        assert_eq!(averaged_kernel_quality(&f, &sample, 0.5, 1e-8).unwrap().outcome, Outcome::Pass);
    }

    #[test]
    fn assembly_of_gaussian_function() {
        let sample = sample_grid(&line(), 5, 1.0).unwrap();
        let f = InvariantFunctionTable::from_fn(sample.differences(), |x| 2.0 * (1.0 - (-x[0] * x[0]).exp())).unwrap();
        let out = strong_uniform_assembly(&f, &sample, 1e-9).unwrap();
        assert_eq!(out.report.outcome, Outcome::Pass);
        for (t, phi) in out.profile.thresholds.iter().zip(&out.profile.phi) {
            assert!((phi - (2.0 * (1.0 - (-t * t).exp())).sqrt()).abs() < 1e-8);
        }
    }

    #[test]
    fn assembly_of_zero_and_square() {
        let sample = pts(&[0.0, 1.0, 2.0, 4.0]);
        let zero = InvariantFunctionTable::from_fn(sample.differences(), |_| 0.0).unwrap();
        let out = strong_uniform_assembly(&zero, &sample, 1e-9).unwrap();
        assert!(out.profile.phi.iter().all(|&v| v == 0.0));
        assert!(!out.report.phi_positive);

        let sq = InvariantFunctionTable::from_fn(sample.differences(), |x| x[0] * x[0]).unwrap();
        let out = strong_uniform_assembly(&sq, &sample, 1e-9).unwrap();
        for i in 0..sample.len() {
            for j in 0..sample.len() {
                assert!((out.embedding.distance(i, j) - sample.metric(i, j)).abs() < 1e-7);
            }
        }
    }
}

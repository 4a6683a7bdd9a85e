use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::uniform::{
    averaged_kernel_quality, chain_bound_check, snowflake_map, strong_uniform_assembly, translation_average_detailed,
    SnowflakedMap,
};
use crate::embeddings::{squared_distance_kernel, EmbeddingCoordinates};
use crate::error::{Error, Result};
use crate::kernels::{default_tolerance, is_negative_definite, snowflake_power};
use crate::maps::EvaluableMap;
use crate::moduli::ModulusProfile;
use crate::report::{Certificate, Outcome};
use crate::spaces::{sample_grid, PointSet};

/// Printed in every pipeline report.
pub const FIDELITY_NOTE: &str = "the invariant mean is replaced by a symmetric average over a finite window; \
the averaged kernel is exact for translation-invariant inputs and only approximately negative definite otherwise";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// The averaging window is the grid of this radius.
    pub window_radius: u32,
    pub window_step: f64,
    pub tol: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self { window_radius: 2, window_step: 1.0, tol: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub stage: String,
    pub passed: bool,
    pub outcome: Outcome,
    pub details: Value,
    pub certificates: Vec<Certificate>,
}

impl StageReport {
    fn new(stage: &str, outcome: Outcome, details: Value) -> Self {
        Self { stage: stage.into(), passed: outcome.passed(), outcome, details, certificates: vec![] }
    }

    fn error(stage: &str, err: &Error) -> Self {
        Self::new(stage, Outcome::Fail, json!({ "error": err.to_string() }))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineReport {
    pub map: String,
    pub sample_size: usize,
    pub p: f64,
    /// Snowflake exponent, `p/2`.
    pub r: f64,
    /// Hölder exponent of the snowflaked map against `‖x − y‖^p`, `r/p`.
    pub a: f64,
    pub lipschitz_constant: f64,
    /// `"declared"` by the map or `"estimated"` from the sample.
    pub lipschitz_source: String,
    pub config: PipelineConfig,
    pub fidelity: String,
    pub stages: Vec<StageReport>,
    pub halted_at: Option<String>,
    pub outcome: Outcome,
    pub embedding: Option<EmbeddingCoordinates>,
    pub profile: Option<ModulusProfile>,
}

/// Largest `‖T(x) − T(y)‖ / ‖x − y‖` over sample pairs.
fn estimated_lipschitz(map: &dyn EvaluableMap, sample: &PointSet) -> Result<f64> {
    let sq = map.squared_distances(sample)?;
    let space = sample.space();
    let mut c = 0.0_f64;
    for i in 0..sample.len() {
        for j in i + 1..sample.len() {
            let diff: Vec<f64> = sample.point(i).iter().zip(sample.point(j)).map(|(a, b)| a - b).collect();
            let d = space.quasi_norm(&diff)?;
            c = c.max(sq.get(i, j).max(0.0).sqrt() / d);
        }
    }
    Ok(c)
}

/// Runs the coarse-to-strong-uniform construction stage by stage, halting at
/// the first stage that does not pass.
///
/// Stages: `chain_bound`, `snowflake_map`, `translation_average`,
/// `averaged_kernel_quality`, `strong_uniform_assembly`. The map is
/// normalized by its Lipschitz constant `C` before snowflaking, so that
/// `‖S(x) − S(y)‖ ≤ (‖x − y‖^p)^a` with `a = 1/2`.
pub fn pipeline_coarse_to_strong_uniform(
    sample: &PointSet,
    map: &dyn EvaluableMap,
    config: &PipelineConfig,
) -> Result<PipelineReport> {
    if sample.len() < 2 {
        return Err(Error::Precondition("pipeline needs at least two sample points".into()));
    }
    let space = *sample.space();
    let p = space.p;
    let r = p / 2.0;
    let a = r / p;
    let (lipschitz_constant, lipschitz_source) = match map.lipschitz_constant(&space) {
        Some(c) => (c, "declared"),
        None => (estimated_lipschitz(map, sample)?, "estimated"),
    };
    let scale = if lipschitz_constant > 0.0 { lipschitz_constant.powf(-r) } else { 1.0 };
    let mut report = PipelineReport {
        map: map.name(),
        sample_size: sample.len(),
        p,
        r,
        a,
        lipschitz_constant,
        lipschitz_source: lipschitz_source.into(),
        config: *config,
        fidelity: FIDELITY_NOTE.into(),
        stages: vec![],
        halted_at: None,
        outcome: Outcome::Pass,
        embedding: None,
        profile: None,
    };
    let halt = |report: &mut PipelineReport, stage: StageReport| -> bool {
        let failed = !stage.passed;
        if failed {
            report.halted_at = Some(stage.stage.clone());
            report.outcome = report.outcome.and(stage.outcome);
        }
        report.stages.push(stage);
        failed
    };

    // Step 1: large-scale Lipschitz bound along chains from the first point
    let stage = match chain_stage(map, sample, lipschitz_constant) {
        Ok(s) => s,
        Err(e) => StageReport::error("chain_bound", &e),
    };
    if halt(&mut report, stage) {
        return Ok(report);
    }

    let snowflaked = SnowflakedMap { base: map, r, scale };
    let stage = match snowflake_stage(map, sample, r, a, scale, config.tol) {
        Ok(s) => s,
        Err(e) => StageReport::error("snowflake_map", &e),
    };
    if halt(&mut report, stage) {
        return Ok(report);
    }

    let window = sample_grid(&space, config.window_radius, config.window_step)?;
    let averaged = match translation_average_detailed(&snowflaked, sample, &window) {
        Ok(avg) => {
            let details = json!({
                "window_size": avg.window_size,
                "domain_size": avg.domain_size,
                "support_size": avg.table.support().len(),
                "origin_value": avg.table.origin_value(),
                "window_spread": avg.spread,
                "translation_invariant_on_window": avg.spread <= config.tol,
                "fidelity": FIDELITY_NOTE,
            });
            let ok = avg.table.origin_value() == 0.0;
            halt(&mut report, StageReport::new("translation_average", Outcome::from_bool(ok), details));
            if !ok {
                return Ok(report);
            }
            avg.table
        }
        Err(e) => {
            halt(&mut report, StageReport::error("translation_average", &e));
            return Ok(report);
        }
    };

    let stage = match averaged_kernel_quality(&averaged, sample, a, config.tol) {
        Ok(q) => {
            let mut s = StageReport::new("averaged_kernel_quality", q.outcome, serde_json::to_value(&q)?);
            s.certificates.extend(q.certificate.clone());
            s
        }
        Err(e) => StageReport::error("averaged_kernel_quality", &e),
    };
    if halt(&mut report, stage) {
        return Ok(report);
    }

    let stage = match strong_uniform_assembly(&averaged, sample, config.tol) {
        Ok(asm) => {
            let profile = &asm.profile;
            let omega_ok = profile
                .thresholds
                .iter()
                .zip(&profile.omega)
                .all(|(t, w)| *w <= t.powf(a) + config.tol);
            let outcome = asm.report.outcome.and(Outcome::from_bool(omega_ok));
            let mut details = serde_json::to_value(&asm.report)?;
            details["holder_upper_ok"] = json!(omega_ok);
            report.embedding = Some(asm.embedding);
            report.profile = Some(asm.profile);
            StageReport::new("strong_uniform_assembly", outcome, details)
        }
        Err(Error::NotDefinite(verdict)) => {
            let kernel = crate::kernels::kernel_from_function(&averaged, sample)?;
            let mut s = StageReport::new(
                "strong_uniform_assembly",
                Outcome::Fail,
                json!({ "error": "averaged kernel is not negative definite", "verdict": *verdict }),
            );
            s.certificates.extend(Certificate::from_verdict("averaged kernel", &kernel, &verdict));
            s
        }
        Err(e) => StageReport::error("strong_uniform_assembly", &e),
    };
    halt(&mut report, stage);
    Ok(report)
}

fn chain_stage(map: &dyn EvaluableMap, sample: &PointSet, c: f64) -> Result<StageReport> {
    let space = sample.space();
    let x = sample.point(0);
    let mut reports = Vec::new();
    for j in 1..sample.len() {
        let y = sample.point(j);
        let diff: Vec<f64> = y.iter().zip(x).map(|(b, a)| b - a).collect();
        if space.quasi_norm(&diff)? >= 1.0 {
            reports.push(chain_bound_check(map, space, x, y, c)?);
        }
    }
    let outcome = reports.iter().fold(Outcome::Pass, |acc, r| acc.and(r.outcome));
    let worst = reports
        .iter()
        .map(|r| r.chain_sum / r.bound.max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);
    Ok(StageReport::new(
        "chain_bound",
        outcome,
        json!({
            "rho2_at_1": c,
            "chains": reports.len(),
            "failed": reports.iter().filter(|r| !r.outcome.passed()).count(),
            "max_chain_sum_over_bound": worst,
        }),
    ))
}

fn snowflake_stage(map: &dyn EvaluableMap, sample: &PointSet, r: f64, a: f64, scale: f64, tol: f64) -> Result<StageReport> {
    let image = map.squared_distances(sample)?;
    let powered = if r == 1.0 { image.clone() } else { snowflake_power(&image, r)? };
    let verdict = is_negative_definite(&powered, default_tolerance(&powered))?;
    if !verdict.passed {
        let mut s = StageReport::new("snowflake_map", Outcome::Fail, json!({ "verdict": verdict }));
        s.certificates.extend(Certificate::from_verdict("snowflaked image kernel", &powered, &verdict));
        return Ok(s);
    }
    let coords = snowflake_map(&image, r)?;
    let realized = squared_distance_kernel(&coords);
    let target_scale = powered.max_abs();
    let distance_error = (realized.entries() - powered.entries()).abs().max();
    let distance_ok = distance_error <= 1e-8 * target_scale.max(f64::MIN_POSITIVE);
    // Hölder bound on sample pairs in place of extending from a net
    let mut holder_excess = f64::NEG_INFINITY;
    for i in 0..sample.len() {
        for j in i + 1..sample.len() {
            let lhs = scale * scale * powered.get(i, j);
            let rhs = sample.metric(i, j).powf(2.0 * a);
            holder_excess = holder_excess.max(lhs - rhs);
        }
    }
    let holder_ok = holder_excess <= tol;
    Ok(StageReport::new(
        "snowflake_map",
        Outcome::from_bool(distance_ok && holder_ok),
        json!({
            "r": r,
            "verdict": verdict,
            "embedding_dim": coords.dim(),
            "max_squared_distance_error": distance_error,
            "holder_ok": holder_ok,
            "max_holder_excess": holder_excess,
        }),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{ConstantMap, GaussianSphereMap, IdentityMap};
    use crate::spaces::QuasiNormedSpace;

    fn grid() -> PointSet {
        sample_grid(&QuasiNormedSpace::euclidean(1), 5, 1.0).unwrap()
    }

    #[test]
    fn gaussian_passes_every_stage() {
        let rep = pipeline_coarse_to_strong_uniform(&grid(), &GaussianSphereMap::default(), &PipelineConfig::default()).unwrap();
        assert_eq!(rep.outcome, Outcome::Pass, "{:?}", rep.halted_at);
        assert_eq!(rep.stages.len(), 5);
        assert!(rep.profile.unwrap().phi.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn constant_map_fails_at_assembly() {
        let rep = pipeline_coarse_to_strong_uniform(&grid(), &ConstantMap, &PipelineConfig::default()).unwrap();
        assert_eq!(rep.halted_at.as_deref(), Some("strong_uniform_assembly"));
        assert_eq!(rep.outcome, Outcome::Fail);
    }

    #[test]
    fn identity_gives_snowflaked_line() {
        let g = grid();
        let rep = pipeline_coarse_to_strong_uniform(&g, &IdentityMap, &PipelineConfig::default()).unwrap();
        assert_eq!(rep.outcome, Outcome::Pass);
        let s = rep.embedding.unwrap();
        for i in 0..g.len() {
            for j in 0..g.len() {
                assert!((s.distance_sq(i, j) - g.metric(i, j)).abs() < 1e-8);
            }
        }
    }
}

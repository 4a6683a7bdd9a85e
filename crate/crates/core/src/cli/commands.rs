use std::path::Path;

use serde_json::json;

use super::{
    C2uArgs, Cli, Command, EmbedArgs, FamilyArgs, GlueArgs, GridArgs, KernelCommand, Mode, ModuliArgs,
    PipelineCommand, RunReport, SpaceCommand, TransformOp, WitnessArgs,
};
use crate::acceptance::run_suite;
use crate::constructions::{build_scale_family, dg_glue, pipeline_coarse_to_strong_uniform, PipelineConfig, ScaleFamily};
use crate::embeddings::{embedding_from_nd, feature_map_from_pd, gram_kernel, squared_distance_kernel, EmbeddingCoordinates};
use crate::error::{Error, Result};
use crate::kernels::{
    default_tolerance, distance_kernel, is_negative_definite, is_positive_definite, pd_witness_validate,
    schoenberg_exp, snowflake_power, witness_validate, DefinitenessVerdict, KernelMatrix,
};
use crate::maps::{ConstantMap, EvaluableMap, GaussianSphereMap, IdentityMap, TabulatedMap};
use crate::moduli::{empirical_moduli, MappedSample, PairEnvelope};
use crate::report::{Certificate, Outcome};
use crate::spaces::{sample_grid_capped, PointSet, QuasiNormedSpace};

pub(super) fn execute(cli: &Cli) -> Result<RunReport> {
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Space(SpaceCommand::Grid(args)) => space_grid(args, out),
        Command::Kernel(KernelCommand::Check { mode, file }) => kernel_check(*mode, file, cli.tol),
        Command::Kernel(KernelCommand::Transform { op, t, a, file }) => kernel_transform(*op, *t, *a, file, out),
        Command::Kernel(KernelCommand::Distance { file }) => kernel_distance(file, out),
        Command::Embed(args) => embed(args, cli.tol, out),
        Command::Moduli(args) => moduli(args, out),
        Command::Family(args) => family(args, out),
        Command::Glue(args) => glue(args, out),
        Command::Pipeline(PipelineCommand::C2u(args)) => pipeline(args, cli.tol, out),
        Command::WitnessValidate(args) => witness(args, cli.tol),
        Command::Demo => demo(),
    }
}

fn space_grid(args: &GridArgs, out: Option<&Path>) -> Result<RunReport> {
    let mut report = RunReport::new("space grid");
    let space = match args.p {
        Some(p) => QuasiNormedSpace::new(args.dim, p, args.q)?,
        None => QuasiNormedSpace::lq(args.dim, args.q)?,
    };
    report.param("space", space);
    report.param("radius", args.radius);
    report.param("step", args.step);
    report.param("cap", args.cap);
    let grid = sample_grid_capped(&space, args.radius, args.step, args.cap)?;
    report.param("points", grid.len());
    report.emit(out, &grid)?;
    Ok(report)
}

fn definiteness_verdict(report: &mut RunReport, name: &str, kernel: &KernelMatrix, verdict: &DefinitenessVerdict) {
    report.verdict(name, Outcome::from_bool(verdict.passed), serde_json::to_value(verdict).unwrap_or_default());
    report.certificates.extend(Certificate::from_verdict(name, kernel, verdict));
}

fn kernel_check(mode: Mode, file: &Path, tol: Option<f64>) -> Result<RunReport> {
    let mut report = RunReport::new("kernel check");
    let k: KernelMatrix = report.read_json(file)?;
    let tol = tol.unwrap_or_else(|| default_tolerance(&k));
    report.param("mode", format!("{mode:?}").to_lowercase());
    report.param("tol", tol);
    let (name, verdict) = match mode {
        Mode::Pd => ("positive definite", is_positive_definite(&k, tol)?),
        Mode::Nd => ("negative definite", is_negative_definite(&k, tol)?),
    };
    definiteness_verdict(&mut report, name, &k, &verdict);
    Ok(report)
}

fn kernel_transform(op: TransformOp, t: Option<f64>, a: Option<f64>, file: &Path, out: Option<&Path>) -> Result<RunReport> {
    let mut report = RunReport::new("kernel transform");
    let k: KernelMatrix = report.read_json(file)?;
    let transformed = match op {
        TransformOp::Exp => {
            let t = t.ok_or_else(|| Error::Precondition("--op exp needs --t".into()))?;
            report.param("op", "exp");
            report.param("t", t);
            schoenberg_exp(&k, t)?
        }
        TransformOp::Power => {
            let a = a.ok_or_else(|| Error::Precondition("--op power needs --a".into()))?;
            report.param("op", "power");
            report.param("a", a);
            snowflake_power(&k, a)?
        }
    };
    report.emit(out, &transformed)?;
    Ok(report)
}

fn kernel_distance(file: &Path, out: Option<&Path>) -> Result<RunReport> {
    let mut report = RunReport::new("kernel distance");
    let points: PointSet = report.read_json(file)?;
    report.param("space", points.space());
    report.emit(out, &distance_kernel(&points))?;
    Ok(report)
}

fn embed(args: &EmbedArgs, tol: Option<f64>, out: Option<&Path>) -> Result<RunReport> {
    let mut report = RunReport::new("embed");
    let k: KernelMatrix = report.read_json(&args.file)?;
    let tol = tol.unwrap_or_else(|| default_tolerance(&k));
    report.param("from", format!("{:?}", args.from).to_lowercase());
    report.param("tol", tol);
    let realized = match args.from {
        Mode::Nd => {
            let base = match &args.basepoint {
                Some(b) => b.clone(),
                None => k.labels().first().cloned().ok_or_else(|| Error::Precondition("empty kernel".into()))?,
            };
            report.param("basepoint", &base);
            embedding_from_nd(&k, &base, tol).map(|e| {
                let err = (squared_distance_kernel(&e).entries() - k.entries()).abs().max();
                (e, err)
            })
        }
        Mode::Pd => feature_map_from_pd(&k, tol).map(|e| {
            let err = (gram_kernel(&e).entries() - k.entries()).abs().max();
            (e, err)
        }),
    };
    match realized {
        Ok((coords, err)) => {
            report.verdict(
                "realization",
                Outcome::Pass,
                json!({ "dim": coords.dim(), "max_reconstruction_error": err }),
            );
            if let Some(csv) = &args.csv {
                std::fs::write(csv, coords.to_csv())?;
                report.param("csv", csv.display().to_string());
            }
            report.emit(out, &coords)?;
        }
        Err(Error::NotDefinite(verdict)) => {
            // the kernel that failed is the input itself (ND) or the input (PD)
            definiteness_verdict(&mut report, "realization", &k, &verdict);
        }
        Err(e) => return Err(e),
    }
    Ok(report)
}

fn parse_list(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::Precondition(format!("`{s}` is not a number")))
        })
        .collect()
}

fn moduli(args: &ModuliArgs, out: Option<&Path>) -> Result<RunReport> {
    let mut report = RunReport::new("moduli");
    let source: PointSet = report.read_json(&args.sample)?;
    let image: EmbeddingCoordinates = report.read_json(&args.image)?;
    let sample = MappedSample::new(source, image)?;
    let thresholds = match &args.thresholds {
        Some(text) => parse_list(text)?,
        None => PairEnvelope::from_sample(&sample)
            .realized_distances()
            .into_iter()
            .filter(|&t| t > 0.0)
            .collect(),
    };
    let profile = empirical_moduli(&sample, &thresholds)?;
    report.param("thresholds", &profile.thresholds);
    let qualifying: Vec<f64> = profile
        .phi
        .iter()
        .zip(&profile.count_ge)
        .filter(|(_, &c)| c > 0)
        .map(|(&p, _)| p)
        .collect();
    let separated = qualifying.iter().all(|&p| p > 0.0);
    let assessment = if separated {
        "consistent with coarse and uniform embedding on this sample (compression positive at every threshold); \
         the asymptotic classification is not decided by a finite sample"
    } else {
        "compression vanishes at some threshold: not injective on this sample"
    };
    report.verdict(
        "profile monotone",
        Outcome::from_bool(profile.is_monotone()),
        json!({ "compression_positive": separated, "assessment": assessment }),
    );
    if let Some(csv) = &args.csv {
        std::fs::write(csv, profile.to_csv())?;
        report.param("csv", csv.display().to_string());
    }
    report.emit(out, &profile)?;
    Ok(report)
}

fn load_map(report: &mut RunReport, choice: &str) -> Result<Box<dyn EvaluableMap>> {
    Ok(match choice {
        "gaussian" => Box::new(GaussianSphereMap::default()),
        "identity" => Box::new(IdentityMap),
        "constant" => Box::new(ConstantMap),
        other => match other.strip_prefix("file:") {
            Some(path) => {
                let map: TabulatedMap = report.read_json(Path::new(path))?;
                Box::new(map)
            }
            None => return Err(Error::Precondition(format!("unknown map `{other}`"))),
        },
    })
}

fn family(args: &FamilyArgs, out: Option<&Path>) -> Result<RunReport> {
    let mut report = RunReport::new("family");
    let sample: PointSet = report.read_json(&args.sample)?;
    let map = load_map(&mut report, &args.map)?;
    report.param("map", map.name());
    report.param("n_max", args.n_max);
    report.param("delta_fraction", args.delta_fraction);
    match build_scale_family(map.as_ref(), &sample, args.delta_fraction, args.n_max) {
        Ok(family) => {
            report.verdict(
                "family invariants",
                Outcome::Pass,
                json!({ "delta": family.delta(), "thresholds": family.thresholds(),
                        "scales": family.scales().iter().map(|e| e.a).collect::<Vec<_>>() }),
            );
            report.emit(out, &family)?;
        }
        Err(Error::ScaleFamily(msg)) => {
            report.verdict("family invariants", Outcome::Fail, json!({ "error": msg }));
        }
        Err(e) => return Err(e),
    }
    Ok(report)
}

fn glue(args: &GlueArgs, out: Option<&Path>) -> Result<RunReport> {
    let mut report = RunReport::new("glue");
    let family: ScaleFamily = report.read_json(&args.family)?;
    let sample: PointSet = report.read_json(&args.sample)?;
    report.param("basepoint", &args.basepoint);
    let glued = dg_glue(&family, &sample, &args.basepoint)?;
    report.verdict(
        "glued sandwich bounds",
        glued.report.outcome,
        json!({ "report": glued.report, "envelope": glued.envelope }),
    );
    report.emit(out, &json!({ "embedding": glued.embedding, "envelope": glued.envelope }))?;
    Ok(report)
}

fn pipeline(args: &C2uArgs, tol: Option<f64>, out: Option<&Path>) -> Result<RunReport> {
    let mut report = RunReport::new("pipeline c2u");
    let sample: PointSet = match (&args.sample, args.dim, args.q, args.radius) {
        (Some(path), _, _, _) => report.read_json(path)?,
        (None, Some(dim), Some(q), Some(radius)) => {
            sample_grid_capped(&QuasiNormedSpace::lq(dim, q)?, radius, args.step, 500)?
        }
        _ => return Err(Error::Precondition("give --sample or all of --dim, --q, --radius".into())),
    };
    let map = load_map(&mut report, &args.map)?;
    let config = PipelineConfig {
        window_radius: args.window_radius,
        window_step: args.window_step,
        tol: tol.unwrap_or(PipelineConfig::default().tol),
    };
    report.param("config", config);
    report.param("map", map.name());
    let bundle = pipeline_coarse_to_strong_uniform(&sample, map.as_ref(), &config)?;
    for stage in &bundle.stages {
        report.verdict(&stage.stage, stage.outcome, json!({ "passed": stage.passed }));
        report.certificates.extend(stage.certificates.iter().cloned());
    }
    report.emit(out, &bundle)?;
    Ok(report)
}

fn witness(args: &WitnessArgs, tol: Option<f64>) -> Result<RunReport> {
    let mut report = RunReport::new("witness-validate");
    let k: KernelMatrix = report.read_json(&args.kernel)?;
    let c = parse_list(&args.vector)?;
    let tol = tol.unwrap_or_else(|| default_tolerance(&k));
    report.param("tol", tol);
    report.param("kind", format!("{:?}", args.kind).to_lowercase());
    let v = match args.kind {
        Mode::Nd => witness_validate(&k, &c, tol)?,
        Mode::Pd => pd_witness_validate(&k, &c, tol)?,
    };
    report.verdict("witness valid", Outcome::from_bool(v.valid), serde_json::to_value(&v)?);
    Ok(report)
}

fn demo() -> Result<RunReport> {
    let mut report = RunReport::new("demo");
    let suite = run_suite(|r| eprintln!("{}", r.line()));
    for r in &suite.results {
        report.verdict(
            &format!("criterion {}: {}", r.id, r.name),
            Outcome::from_bool(r.passed),
            json!({ "summary": r.summary }),
        );
    }
    report.param("certificates_checked", suite.certificates_checked);
    Ok(report)
}

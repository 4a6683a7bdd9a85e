//! The `coarsekit` command line.
//!
//! Every subcommand prints one [`RunReport`] as JSON on stdout and a short
//! human summary on stderr. Exit codes: 0 when every verdict passed, 2 when
//! a verdict failed, 3 when nothing failed but something was inconclusive,
//! 1 for usage, input and I/O errors.

mod commands;

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::report::{Certificate, Outcome};

#[derive(Debug, Parser)]
#[command(name = "coarsekit", version, about = "Kernel definiteness, Hilbert-space embeddings and embedding moduli on finite samples")]
pub struct Cli {
    /// Tolerance override; each command states its default in the report.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Write the produced artifact here instead of embedding it in the report.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Omit wall-clock time so reports are byte-for-byte reproducible.
    #[arg(long, global = true)]
    pub no_meta: bool,
    /// Worker threads, 0 for one per core.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Point sets.
    #[command(subcommand)]
    Space(SpaceCommand),
    /// Kernel matrices.
    #[command(subcommand)]
    Kernel(KernelCommand),
    /// Realize a kernel as Euclidean vectors.
    Embed(EmbedArgs),
    /// Empirical compression and expansion moduli.
    Moduli(ModuliArgs),
    /// Build a family of rescaled sphere maps for gluing.
    Family(FamilyArgs),
    /// Glue a scale family into one coarse embedding.
    Glue(GlueArgs),
    /// Multi-stage constructions.
    #[command(subcommand)]
    Pipeline(PipelineCommand),
    /// Check that a vector witnesses a definiteness failure.
    WitnessValidate(WitnessArgs),
    /// Run the acceptance suite.
    Demo,
}

#[derive(Debug, Subcommand)]
pub enum SpaceCommand {
    /// Integer grid `{−R..R}^D` scaled by the step.
    Grid(GridArgs),
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    #[arg(long)]
    pub dim: usize,
    #[arg(long)]
    pub q: f64,
    /// Defaults to min(q, 1).
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub radius: u32,
    #[arg(long, default_value_t = 1.0)]
    pub step: f64,
    #[arg(long, default_value_t = crate::spaces::DEFAULT_GRID_CAP)]
    pub cap: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Pd,
    Nd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TransformOp {
    Exp,
    Power,
}

#[derive(Debug, Subcommand)]
pub enum KernelCommand {
    /// Test positive or negative definiteness.
    Check {
        #[arg(long, value_enum)]
        mode: Mode,
        file: PathBuf,
    },
    /// Entrywise `exp(−tN)` or `N^a`.
    Transform {
        #[arg(long, value_enum)]
        op: TransformOp,
        #[arg(long)]
        t: Option<f64>,
        #[arg(long)]
        a: Option<f64>,
        file: PathBuf,
    },
    /// Metric distance kernel of a point set.
    Distance { file: PathBuf },
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    #[arg(long, value_enum)]
    pub from: Mode,
    /// Point sent to the origin (ND input only).
    #[arg(long)]
    pub basepoint: Option<String>,
    /// Also write the coordinates as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    pub file: PathBuf,
}

#[derive(Debug, Args)]
pub struct ModuliArgs {
    #[arg(long)]
    pub sample: PathBuf,
    #[arg(long)]
    pub image: PathBuf,
    /// Comma-separated positive thresholds; defaults to every realized distance.
    #[arg(long)]
    pub thresholds: Option<String>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FamilyArgs {
    #[arg(long)]
    pub sample: PathBuf,
    /// `gaussian` or `file:map.json`
    #[arg(long, default_value = "gaussian")]
    pub map: String,
    #[arg(long, default_value_t = 4)]
    pub n_max: u32,
    #[arg(long, default_value_t = 1.0)]
    pub delta_fraction: f64,
}

#[derive(Debug, Args)]
pub struct GlueArgs {
    #[arg(long)]
    pub family: PathBuf,
    #[arg(long)]
    pub sample: PathBuf,
    #[arg(long)]
    pub basepoint: String,
}

#[derive(Debug, Subcommand)]
pub enum PipelineCommand {
    /// Coarse map to strong uniform embedding.
    C2u(C2uArgs),
}

#[derive(Debug, Args)]
pub struct C2uArgs {
    /// Sample point set; alternatively give a grid with the flags below.
    #[arg(long)]
    pub sample: Option<PathBuf>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long)]
    pub radius: Option<u32>,
    #[arg(long, default_value_t = 1.0)]
    pub step: f64,
    /// `gaussian`, `identity`, `constant` or `file:map.json`
    #[arg(long)]
    pub map: String,
    #[arg(long, default_value_t = 2)]
    pub window_radius: u32,
    #[arg(long, default_value_t = 1.0)]
    pub window_step: f64,
}

#[derive(Debug, Args)]
pub struct WitnessArgs {
    #[arg(long)]
    pub kernel: PathBuf,
    /// Comma-separated coefficients.
    #[arg(long, allow_hyphen_values = true)]
    pub vector: String,
    #[arg(long, value_enum, default_value = "nd")]
    pub kind: Mode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub passed: bool,
    pub outcome: Outcome,
    pub details: Value,
}

/// Everything a run decided, self-contained enough to re-check offline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub inputs: Vec<InputDigest>,
    /// Tolerances and other settings in effect, defaults included.
    pub parameters: Value,
    pub verdicts: Vec<Verdict>,
    pub certificates: Vec<Certificate>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub result: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub wall_time: Option<f64>,
}

impl RunReport {
    fn new(command: &str) -> Self {
        Self {
            command: command.into(),
            inputs: vec![],
            parameters: Value::Object(Default::default()),
            verdicts: vec![],
            certificates: vec![],
            result: None,
            wall_time: None,
        }
    }

    fn param(&mut self, key: &str, value: impl Serialize) {
        self.parameters[key] = serde_json::to_value(value).unwrap_or(Value::Null);
    }

    fn verdict(&mut self, name: &str, outcome: Outcome, details: Value) {
        self.verdicts.push(Verdict { name: name.into(), passed: outcome.passed(), outcome, details });
    }

    /// Worst outcome over all verdicts; `Pass` when there are none.
    pub fn outcome(&self) -> Outcome {
        self.verdicts.iter().fold(Outcome::Pass, |acc, v| acc.and(v.outcome))
    }

    pub fn exit_code(&self) -> i32 {
        match self.outcome() {
            Outcome::Pass => 0,
            Outcome::Fail => 2,
            Outcome::Inconclusive => 3,
        }
    }

    fn read_bytes(&mut self, path: &Path) -> Result<Vec<u8>> {
        let bytes = std::fs::read(path)
            .map_err(|e| Error::Input(format!("cannot read {}: {e}", path.display())))?;
        let digest = Sha256::digest(&bytes);
        self.inputs.push(InputDigest {
            path: path.display().to_string(),
            sha256: digest.iter().map(|b| format!("{b:02x}")).collect(),
        });
        Ok(bytes)
    }

    fn read_json<T: serde::de::DeserializeOwned>(&mut self, path: &Path) -> Result<T> {
        let bytes = self.read_bytes(path)?;
        serde_json::from_slice(&bytes)
            .map_err(|e| Error::Input(format!("{}: malformed input: {e}", path.display())))
    }

    /// Writes the artifact to `--out` when given, otherwise embeds it.
    fn emit(&mut self, out: Option<&Path>, artifact: &impl Serialize) -> Result<()> {
        let value = serde_json::to_value(artifact)?;
        match out {
            Some(path) => {
                let mut text = serde_json::to_string_pretty(&value)?;
                text.push('\n');
                std::fs::write(path, text)?;
                self.param("out", path.display().to_string());
            }
            None => self.result = Some(value),
        }
        Ok(())
    }

    fn summary(&self) -> String {
        let mut lines = vec![format!("{}: {:?}", self.command, self.outcome()).to_lowercase()];
        for v in &self.verdicts {
            lines.push(format!("  {} {:?}", v.name, v.outcome).to_lowercase());
        }
        if !self.certificates.is_empty() {
            lines.push(format!("  {} certificate(s) attached", self.certificates.len()));
        }
        lines.join("\n")
    }
}

/// Parses `argv` (program name first) and runs the command.
pub fn run(argv: impl IntoIterator<Item = String>) -> std::result::Result<RunReport, RunError> {
    let cli = Cli::try_parse_from(argv).map_err(RunError::Usage)?;
    if cli.threads > 0 {
        // a second initialization in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global();
    }
    let start = Instant::now();
    let mut report = commands::execute(&cli).map_err(RunError::Failed)?;
    if !cli.no_meta {
        report.wall_time = Some(start.elapsed().as_secs_f64());
    }
    Ok(report)
}

#[derive(Debug)]
pub enum RunError {
    Usage(clap::Error),
    Failed(Error),
}

/// Runs the command line, printing the report and summary; returns the exit code.
pub fn dispatch(argv: impl IntoIterator<Item = String>) -> i32 {
    match run(argv) {
        Ok(report) => {
            match serde_json::to_string_pretty(&report) {
                // a closed pipe downstream is not our failure
                Ok(text) => drop(writeln!(std::io::stdout().lock(), "{text}")),
                Err(e) => {
                    eprintln!("error: {e}");
                    return 1;
                }
            }
            eprintln!("{}", report.summary());
            report.exit_code()
        }
        Err(RunError::Usage(e)) => {
            let informational = matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            );
            let _ = e.print();
            if informational {
                0
            } else {
                1
            }
        }
        Err(RunError::Failed(e)) => {
            eprintln!("error: {e}");
            1
        }
    }
}

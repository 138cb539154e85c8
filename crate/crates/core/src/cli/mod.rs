//! Command-line experiment runner.
//!
//! `run` executes one pipeline and writes a JSON (or one-row CSV) record;
//! `sweep` varies ε and the control parameters and writes a CSV table.
//! Flags given on the command line take precedence over a `--config` file.

pub mod config;
pub mod pipeline;
pub mod sweep;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::hyers::LambdaMode;
use crate::Error;
use config::{
    parse_base_flag, parse_control_flag, parse_endo_flag, parse_perturb_flag, ExperimentConfig, FixtureDoc,
    FixtureSpec, ModuleKind, OutputFormat, OutputSpec, Pipeline,
};

/// Environment variable holding the default seed.
pub const SEED_ENV: &str = "SIGTAU_SEED";

#[derive(Parser, Debug)]
#[command(name = "sigtau", version, about = "Experiments on approximate (sigma, tau)-derivations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run one pipeline and write its record.
    Run(CommonArgs),
    /// Sweep epsilon and control parameters, writing one CSV row per grid point.
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum LambdaFlag {
    Full,
    OneI,
}

#[derive(Args, Debug, Clone, Default)]
pub struct CommonArgs {
    /// JSON experiment config; command-line flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Builtin fixture (matrix:n, dual-numbers, upper-triangular:n, zero-product:n) or a JSON fixture file.
    #[arg(long)]
    pub fixture: Option<String>,
    /// Regular module or its dual
    #[arg(long, value_enum)]
    pub module: Option<ModuleKind>,
    /// Dimension of the trivial-action summand added to the module.
    #[arg(long)]
    pub annihilator_dim: Option<usize>,
    #[arg(long, value_enum)]
    pub pipeline: Option<Pipeline>,
    /// id, zero, conjugation:k or a JSON matrix literal.
    #[arg(long)]
    pub sigma: Option<String>,
    /// Same forms as --sigma
    #[arg(long)]
    pub tau: Option<String>,
    /// Base derivation: inner, outer, zero, or JSON.
    #[arg(long)]
    pub base: Option<String>,
    /// constant:α, pnorm:α,β,p or JSON.
    #[arg(long)]
    pub control: Option<String>,
    /// annihilator:ε or a JSON perturbation spec.
    #[arg(long)]
    pub perturb: Option<String>,
    /// Master seed for sampling and noise
    #[arg(long, env = SEED_ENV)]
    pub seed: Option<u64>,
    /// Sampled points per check
    #[arg(long)]
    pub samples: Option<usize>,
    /// Write the record here instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Record format; sweeps require csv
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
    /// Scalars checked for homogeneity: 64 roots of unity, or 1 and i
    #[arg(long, value_enum)]
    pub lambda_mode: Option<LambdaFlag>,
    /// Add wall time to the record (breaks byte-identical reruns).
    #[arg(long)]
    pub record_timing: bool,
}

#[derive(Args, Debug, Clone)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Annihilator noise levels
    #[arg(long, value_delimiter = ',')]
    pub epsilon: Vec<f64>,
    /// PNorm control constants
    #[arg(long, value_delimiter = ',')]
    pub alpha: Vec<f64>,
    /// PNorm control scales
    #[arg(long, value_delimiter = ',')]
    pub beta: Vec<f64>,
    /// PNorm exponents in [0, 1)
    #[arg(long, value_delimiter = ',')]
    pub p: Vec<f64>,
}

fn fixture_from_flag(text: &str) -> Result<FixtureSpec, Error> {
    let path = std::path::Path::new(text);
    if text.ends_with(".json") || path.is_file() {
        let body = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {text}: {e}")))?;
        let doc: FixtureDoc = serde_json::from_str(&body).map_err(|e| Error::Config(format!("{text}: {e}")))?;
        Ok(FixtureSpec::Document(Box::new(doc)))
    } else {
        Ok(FixtureSpec::Builtin(text.to_string()))
    }
}

/// Builds the effective config: file (if any), then flags on top.
pub fn effective_config(args: &CommonArgs, default_pipeline: Pipeline) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::new("matrix:2", default_pipeline),
    };
    if let Some(f) = &args.fixture {
        cfg.fixture = fixture_from_flag(f)?;
    }
    if let Some(m) = args.module {
        cfg.module = m;
    }
    if let Some(k) = args.annihilator_dim {
        cfg.annihilator_dim = Some(k);
    }
    if let Some(p) = args.pipeline {
        cfg.pipeline = p;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(s) = &args.sigma {
        cfg.sigma = parse_endo_flag(s)?;
    }
    if let Some(t) = &args.tau {
        cfg.tau = parse_endo_flag(t)?;
    }
    if let Some(b) = &args.base {
        cfg.base = parse_base_flag(b)?;
    }
    if let Some(c) = &args.control {
        cfg.control = Some(parse_control_flag(c)?);
    }
    if let Some(p) = &args.perturb {
        cfg.perturbation = Some(parse_perturb_flag(p, cfg.seed)?);
    }
    if let Some(n) = args.samples {
        cfg.samples = n;
    }
    if let Some(l) = args.lambda_mode {
        cfg.lambda_mode = match l {
            LambdaFlag::Full => LambdaMode::Full,
            LambdaFlag::OneI => LambdaMode::OneI,
        };
    }
    if args.out.is_some() || args.format.is_some() {
        let prev = cfg.output.take();
        cfg.output = Some(OutputSpec {
            path: args.out.as_ref().map(|p| p.display().to_string()).or(prev.as_ref().and_then(|o| o.path.clone())),
            format: args.format.or(prev.map(|o| o.format)).unwrap_or_default(),
        });
    }
    Ok(cfg)
}

fn emit(cfg: &ExperimentConfig, text: &str) -> Result<(), Error> {
    match cfg.output.as_ref().and_then(|o| o.path.as_ref()) {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::Config(format!("cannot write {path}: {e}"))),
        None => {
            let mut out = std::io::stdout().lock();
            match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
                    Err(Error::Config(format!("cannot write stdout: {e}")))
                }
                _ => Ok(()),
            }
        }
    }
}

fn format_of(cfg: &ExperimentConfig) -> OutputFormat {
    cfg.output.as_ref().map(|o| o.format).unwrap_or_default()
}

fn execute(cli: Cli) -> Result<i32, Error> {
    match cli.command {
        Command::Run(args) => {
            let cfg = effective_config(&args, Pipeline::Extract)?;
            let record = pipeline::run(&cfg, args.record_timing)?;
            let text = match format_of(&cfg) {
                OutputFormat::Json => record.to_json(),
                OutputFormat::Csv => record.to_csv()?,
            };
            emit(&cfg, &text)?;
            Ok(record.exit_code)
        }
        Command::Sweep(args) => {
            let cfg = effective_config(&args.common, Pipeline::Extract)?;
            let grid = sweep::SweepGrid { epsilon: args.epsilon, alpha: args.alpha, beta: args.beta, p: args.p };
            let rows = sweep::sweep(&cfg, &grid)?;
            let text = match format_of(&cfg) {
                OutputFormat::Csv => sweep::rows_to_csv(&rows)?,
                OutputFormat::Json => {
                    return Err(Error::Config("sweeps are written as CSV; use --format csv".into()));
                }
            };
            emit(&cfg, &text)?;
            let bad = rows.iter().any(|r| r.status != "ok" || r.bound_holds == Some(false));
            Ok(if bad { 2 } else { 0 })
        }
    }
}

/// Parses arguments and runs. Returns the process exit code: 0 on satisfied
/// verdicts, 2 on violated or infeasible ones, 1 on errors.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

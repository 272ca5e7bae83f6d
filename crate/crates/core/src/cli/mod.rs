//! Reproducible experiment runner behind the `etais` binary: configuration
//! documents, repeat orchestration and artifact emission.
//!
//! Every flag has an environment override: `ETAIS_CONFIG`, `ETAIS_PRESET`,
//! `ETAIS_SEED`, `ETAIS_REPEATS`, `ETAIS_OUT` and `ETAIS_THREADS`. Flags win
//! over the environment, which wins over the configuration document.

mod config;
mod experiment;
mod problem;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

pub use config::{
    CustomDensity, DataSource, DiagnosticsConfig, ExperimentConfig, ProblemConfig, TuneConfig,
    PRESETS,
};
pub use experiment::{
    diagnose, run_experiment, simulate, tune, BuildInfo, Manifest, PilotResult, RepeatRecord,
    RunReport, SimulationReport, TuneReport,
};
pub use problem::{load_dataset, Problem};

use crate::error::{Error, Result};

#[derive(Debug, Parser)]
#[command(
    name = "etais",
    version,
    about = "Transport-map ETAIS experiments: simulate data, tune, run and diagnose"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate and store a reaction-network dataset.
    Simulate,
    /// Pilot runs over the tuning grid; writes the tuned configuration.
    Tune,
    /// Run all repeats and write sample logs, maps and metrics.
    Run,
    /// Recompute metrics from the logs stored in the output directory.
    Diagnose,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Experiment configuration (JSON).
    #[arg(long, global = true, env = "ETAIS_CONFIG", value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Built-in configuration, used when no --config is given.
    #[arg(long, global = true, env = "ETAIS_PRESET", value_name = "NAME")]
    pub preset: Option<String>,
    /// Master seed; repeat r uses seed + r.
    #[arg(long, global = true, env = "ETAIS_SEED", value_name = "U64")]
    pub seed: Option<u64>,
    #[arg(long, global = true, env = "ETAIS_REPEATS", value_name = "N")]
    pub repeats: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, env = "ETAIS_OUT", value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true, env = "ETAIS_THREADS", value_name = "N")]
    pub threads: Option<usize>,
}

impl CommonArgs {
    /// The configuration document with flag overrides applied.
    pub fn resolve(&self) -> Result<ExperimentConfig> {
        let mut config = match (&self.config, &self.preset) {
            (Some(path), _) => ExperimentConfig::load(path)?,
            (None, Some(name)) => ExperimentConfig::preset(name)?,
            (None, None) => {
                return Err(Error::Config(
                    "no configuration: pass --config PATH or --preset NAME".into(),
                ))
            }
        };
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(repeats) = self.repeats {
            config.repeats = repeats;
        }
        if let Some(out) = &self.out {
            config.output = out.clone();
        }
        Ok(config)
    }
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    command: &'a str,
    error: String,
    detail: String,
}

fn execute(cli: &Cli) -> Result<i32> {
    match cli.command {
        Command::Diagnose => {
            let dir = match (&cli.common.out, cli.common.resolve()) {
                (Some(dir), _) => dir.clone(),
                (None, Ok(config)) => config.output,
                (None, Err(e)) => return Err(e),
            };
            let rows = diagnose(&dir)?;
            println!(
                "recomputed {} metric rows into {}",
                rows.len(),
                dir.join("diagnostics").display()
            );
            Ok(0)
        }
        Command::Simulate => {
            let config = cli.common.resolve()?;
            let report = simulate(&config)?;
            println!(
                "{} events written to {}",
                report.events,
                report.dataset.display()
            );
            Ok(0)
        }
        Command::Tune => {
            let config = cli.common.resolve()?;
            let report = tune(&config)?;
            for p in &report.pilots {
                match p.metric {
                    Some(m) => println!("beta {:<8} {m:.4}", p.beta),
                    None => println!("beta {:<8} failed", p.beta),
                }
            }
            if config.sampler.algorithm.is_ensemble() && !report.unimodal {
                eprintln!("warning: the ESS ratio is not unimodal over the grid");
            }
            println!(
                "selected beta {} -> {}",
                report.selected,
                config.output.join("tuned_config.json").display()
            );
            Ok(0)
        }
        Command::Run => {
            let config = cli.common.resolve()?;
            let report = run_experiment(&config)?;
            for r in &report.repeats {
                if let Some(e) = &r.error {
                    eprintln!(
                        "{}",
                        serde_json::to_string(&ErrorReport {
                            command: "run",
                            error: format!("repeat {} failed", r.index),
                            detail: e.clone(),
                        })?
                    );
                }
            }
            println!(
                "{} repeats written to {}",
                report.repeats.len(),
                report.output.display()
            );
            Ok(i32::from(report.failures() > 0))
        }
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Simulate => "simulate",
        Command::Tune => "tune",
        Command::Run => "run",
        Command::Diagnose => "diagnose",
    }
}

/// Parses `args` and runs the command on a pool of `--threads` workers.
/// Returns the process exit status; failures are reported on stderr as a
/// JSON object.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.common.threads {
        pool = pool.num_threads(n);
    }
    let result = pool
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
        .and_then(|pool| pool.install(|| execute(&cli)));
    match result {
        Ok(code) => code,
        Err(e) => {
            let report = ErrorReport {
                command: command_name(&cli.command),
                error: error_kind(&e).into(),
                detail: e.to_string(),
            };
            eprintln!(
                "{}",
                serde_json::to_string(&report).unwrap_or_else(|_| e.to_string())
            );
            2
        }
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Config(_) => "config",
        Error::Io(_) => "io",
        Error::Json(_) => "json",
        Error::Csv(_) => "csv",
        Error::DegenerateEnsemble => "degenerate_ensemble",
        Error::InconsistentPath { .. } => "inconsistent_path",
        Error::PropensityOverflow { .. } => "propensity_overflow",
        _ => "numerical",
    }
}

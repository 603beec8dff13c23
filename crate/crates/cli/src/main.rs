//! `specgal`: batch runner for spectral-Galerkin control experiments.

mod config;
mod experiments;
mod failure;
mod setup;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use serde::Serialize;
use sha2::{Digest, Sha256};

use config::Experiment;
use failure::Failure;

/// Output directory override when neither `--out` nor `output_dir` is given.
const OUT_ENV: &str = "SPECGAL_OUT";

#[derive(Debug, Parser)]
#[command(name = "specgal", version, about = "Spectral-Galerkin optimal control experiments")]
struct Cli {
    #[arg(value_enum)]
    experiment: Experiment,
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; falls back to $SPECGAL_OUT, the config, then ./specgal-out.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Size of the worker pool for parallel sweeps.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'a str,
    version: &'a str,
    core_version: &'a str,
    experiment: &'a str,
    problem: &'a str,
    config_sha256: String,
    seed: u64,
    outputs: &'a [String],
    status: &'a str,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{f}");
            ExitCode::from(f.exit_code())
        }
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let (mut config, raw) = config::load(&cli.config)?;
    if let Some(e) = config.experiment {
        if e != cli.experiment {
            return Err(Failure::Config(format!(
                "{}: `experiment` is {} but the subcommand is {}",
                cli.config.display(),
                e.name(),
                cli.experiment.name()
            )));
        }
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Config(format!("--threads: {e}")))?;
    }
    let out = cli
        .out
        .clone()
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .or_else(|| config.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("specgal-out"));
    std::fs::create_dir_all(&out).map_err(|e| Failure::Config(format!("{}: {e}", out.display())))?;

    let setup = setup::build(&config)?;
    let outcome = experiments::run(cli.experiment, &setup, config.seed, &out)?;
    let status = match &outcome.failure {
        None => "ok",
        Some(Failure::Check(_)) => "check-failed",
        Some(Failure::NonConvergence(_)) => "not-converged",
        Some(Failure::Config(_)) => "error",
    };
    let manifest = Manifest {
        tool: "specgal",
        version: env!("CARGO_PKG_VERSION"),
        core_version: specgal_core::VERSION,
        experiment: cli.experiment.name(),
        problem: &setup.label,
        config_sha256: Sha256::digest(&raw).iter().map(|b| format!("{b:02x}")).collect(),
        seed: config.seed,
        outputs: &outcome.files,
        status,
    };
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Failure::Config(e.to_string()))?;
    let mut file = std::fs::File::create(out.join("manifest.json"))?;
    writeln!(file, "{text}")?;
    println!("{}: {} files in {} ({status})", cli.experiment.name(), outcome.files.len() + 1, out.display());
    match outcome.failure {
        Some(f) => Err(f),
        None => Ok(()),
    }
}

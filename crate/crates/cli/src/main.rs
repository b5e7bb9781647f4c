//! `sofi-crb`: batch runner for the correlation-order experiment suite.

mod config;
mod error;
mod manifest;
mod output;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::{error, info};

use config::Command;
use error::{CliError, CliResult};

#[derive(Parser, Debug)]
#[command(name = "sofi-crb", version, about = "Fisher-information bounds and Monte-Carlo experiments for correlation imaging")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args, Debug, Clone)]
struct RunArgs {
    /// JSON parameter file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Random seed; overrides `seed` from the config file.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; overrides `workers` from the config file.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Correlation and probability fields on the detection grid.
    Field(RunArgs),
    /// Bound versus separation.
    ErrorVsScale(RunArgs),
    /// Bound versus correlation order.
    ErrorVsOrder(RunArgs),
    /// Minimal resolvable separation per error budget.
    ResolutionScan(RunArgs),
    /// Two-source dip contrast and profiles.
    DipContrast(RunArgs),
    /// Spread of blinking cumulant estimates.
    BlinkRatio(RunArgs),
    /// Shot-noise envelopes of single-pixel cumulants.
    ShotNoise(RunArgs),
    /// Ideal cumulant images.
    CumulantImage(RunArgs),
    /// Print the JSON manifest of all commands.
    ListExperiments {
        /// Also write `manifest.json` into this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run_command(command: Command, args: &RunArgs) -> CliResult<()> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", args.config.display())))?;
    let (plan, settings) = config::resolve(command, &text)?;
    let seed = args.seed.or(settings.seed).unwrap_or(0);
    let workers = args
        .workers
        .or(settings.workers)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if workers == 0 {
        return Err(CliError::Config("workers must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {workers} workers: {e}")))?;
    info!("{command}: seed {seed}, {workers} workers");
    let artifacts = pool.install(|| run::execute(command, &plan, seed))?;
    for path in output::write_artifacts(&args.out, &artifacts)? {
        info!("wrote {}", path.display());
    }
    Ok(())
}

fn list_experiments(out: Option<&PathBuf>) -> CliResult<()> {
    let text = serde_json::to_string_pretty(&manifest::manifest()).expect("manifest serializes");
    println!("{text}");
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        output::write_atomic(&dir.join("manifest.json"), format!("{text}\n").as_bytes())?;
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Cmd::Field(a) => run_command(Command::Field, a),
        Cmd::ErrorVsScale(a) => run_command(Command::ErrorVsScale, a),
        Cmd::ErrorVsOrder(a) => run_command(Command::ErrorVsOrder, a),
        Cmd::ResolutionScan(a) => run_command(Command::ResolutionScan, a),
        Cmd::DipContrast(a) => run_command(Command::DipContrast, a),
        Cmd::BlinkRatio(a) => run_command(Command::BlinkRatio, a),
        Cmd::ShotNoise(a) => run_command(Command::ShotNoise, a),
        Cmd::CumulantImage(a) => run_command(Command::CumulantImage, a),
        Cmd::ListExperiments { out } => list_experiments(out.as_ref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            e.exit_code()
        }
    }
}

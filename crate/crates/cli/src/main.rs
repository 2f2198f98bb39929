//! `ads3d`: fit per-class memory banks, evaluate them, generate synthetic
//! data and convert image files.
//!
//! Exit status: 0 success, 2 configuration error, 3 data error,
//! 4 a metric is undefined for some class (the report is still written).

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::{ConvertArgs, Outcome, SynthArgs};
use crate::config::{ConfigError, Settings};

#[derive(Debug, Parser)]
#[command(name = "ads3d", version, about = "3D anomaly detection and segmentation with patch memory banks")]
#[command(args_override_self = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct RunArgs {
    /// `key=value` settings file; flags take precedence over it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    settings: Settings,
}

impl RunArgs {
    fn resolve(self) -> anyhow::Result<Settings> {
        let base = match &self.config {
            Some(path) => Settings::load(path)?,
            None => Settings::default(),
        };
        Ok(base.overlay(self.settings))
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build and save one memory bank per class from its training split.
    Fit(RunArgs),
    /// Score test splits against saved banks; write report, curves and heatmaps.
    Eval(RunArgs),
    /// Generate a seeded synthetic dataset.
    Synth(SynthArgs),
    /// Convert 8-bit images between PNG and ADTN.
    Convert(ConvertArgs),
}

fn configure_threads() -> anyhow::Result<()> {
    let Ok(v) = std::env::var("ADS3D_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| ConfigError(format!("ADS3D_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| ConfigError(format!("thread pool: {e}")))?;
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<Outcome> {
    configure_threads()?;
    match cli.command {
        Command::Fit(a) => commands::fit(&a.resolve()?),
        Command::Eval(a) => commands::eval(&a.resolve()?),
        Command::Synth(a) => commands::synth(&a),
        Command::Convert(a) => commands::convert(&a),
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.is::<ConfigError>() {
        return 2;
    }
    match e.downcast_ref::<ads3d::Error>() {
        Some(ads3d::Error::InvalidParameter(_)) => 2,
        Some(ads3d::Error::UndefinedMetric(_)) => 4,
        _ => 3,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(Outcome::Success) => ExitCode::SUCCESS,
        Ok(Outcome::Degenerate) => ExitCode::from(4),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fixpoint_lab::cli::{list_catalog, run_experiment, validate_config, ExperimentConfig, Overrides};

/// Batch runner for fixed-point iteration experiments, asymptotic-center
/// solves, and verification suites on truncated sequence spaces.
#[derive(Parser)]
#[command(name = "fixpoint-lab", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute an experiment described by a JSON config.
    Run {
        /// Path to the experiment config.
        #[arg(long)]
        config: PathBuf,
        /// Override the config's seed (seeded suites only).
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (overrides FIXPOINT_LAB_OUT and the default ".").
        #[arg(long)]
        out: Option<PathBuf>,
        /// Include full iterate lists in JSON trace output.
        #[arg(long)]
        full: bool,
        /// Fan independent seeds out across this many workers.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Print the operator and suite catalog.
    List,
    /// Check a config without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run { config, seed, out, full, jobs } => {
            let cfg = match load_config(&config) {
                Ok(cfg) => cfg,
                Err(code) => return code,
            };
            let overrides =
                Overrides { seed, out_dir: out, full: if full { Some(true) } else { None }, jobs };
            match run_experiment(&cfg, &overrides) {
                Ok(outcome) => {
                    println!("{}", outcome.summary);
                    ExitCode::from(outcome.exit_code as u8)
                }
                Err(err) => {
                    eprintln!("error: {err}");
                    ExitCode::from(1)
                }
            }
        }
        Command::List => {
            print!("{}", list_catalog());
            ExitCode::SUCCESS
        }
        Command::Validate { config } => {
            let cfg = match load_config(&config) {
                Ok(cfg) => cfg,
                Err(code) => return code,
            };
            match validate_config(&cfg) {
                Ok(()) => {
                    println!("ok: {}", config.display());
                    ExitCode::SUCCESS
                }
                Err(err) => {
                    eprintln!("error: {err}");
                    ExitCode::from(1)
                }
            }
        }
    }
}

fn load_config(path: &PathBuf) -> Result<ExperimentConfig, ExitCode> {
    let text = fs::read_to_string(path).map_err(|err| {
        eprintln!("error: cannot read {}: {err}", path.display());
        ExitCode::from(1)
    })?;
    ExperimentConfig::from_json(&text).map_err(|err| {
        eprintln!("error: {err}");
        ExitCode::from(1)
    })
}

//! `tiedecay` — runs the toolkit's experiments from TOML configs and writes
//! CSV tables with a JSON manifest header.
//!
//! Exit codes: 0 success, 1 i/o failure, 2 configuration error, 3 numerical
//! failure.

mod config;
mod error;
mod experiments;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{ExperimentConfig, EXPERIMENT_IDS};
use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "tiedecay", version, about = "Tie-decay network experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run an experiment and write its CSV output.
    Run {
        config: PathBuf,
        /// Override the config's master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Worker threads (default: all cores). Outputs do not depend on it.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Check a config without running it; lists every violation.
    Validate { config: PathBuf },
    /// Print the known experiment ids.
    ListExperiments,
}

fn run(config_path: &Path, seed: Option<u64>, out: &Path, workers: Option<usize>) -> Result<PathBuf, CliError> {
    let mut config = ExperimentConfig::load(config_path)?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(k) = workers {
        if k == 0 {
            return Err(CliError::Config("--workers must be at least 1".into()));
        }
        pool = pool.num_threads(k);
    }
    let pool = pool.build().map_err(|e| CliError::Io(std::io::Error::other(e)))?;
    let table = pool.install(|| experiments::run(&config))?;
    let bytes = output::render(&config, &table)?;
    output::write_atomic(out, &config.output, &bytes)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run {
            config,
            seed,
            out,
            workers,
        } => run(config, *seed, out, *workers).map(|path| println!("wrote {}", path.display())),
        Command::Validate { config } => ExperimentConfig::load(config).and_then(|c| {
            let violations = experiments::check(&c);
            if violations.is_empty() {
                println!("{}: ok ({})", config.display(), c.experiment);
                Ok(())
            } else {
                for v in &violations {
                    println!("violation: {v}");
                }
                Err(CliError::Config(format!("{} violation(s)", violations.len())))
            }
        }),
        Command::ListExperiments => {
            EXPERIMENT_IDS.iter().for_each(|id| println!("{id}"));
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

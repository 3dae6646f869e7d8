//! `tourney-lab`: generate result pools, estimate true rankings, and run
//! tournament-format experiments.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 input validation failure.

mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tourney_core::montecarlo::DEFAULT_BOOTSTRAP_ROUNDS;
use tourney_core::SchemeKind;

#[derive(Parser)]
#[command(
    name = "tourney-lab",
    version,
    about = "Monte Carlo evaluation of tournament formats"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic game-record file from a strength model.
    Gen {
        #[arg(long)]
        model: PathBuf,
        /// Games per pair of teams.
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        games: u64,
        /// Overrides the model file's seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rank teams over a full game pool and measure ranking stability.
    Truth {
        #[arg(long)]
        games: PathBuf,
        #[arg(long, default_value = "continuous")]
        scheme: SchemeKind,
        /// Pool resamples for adjacent-pair stability; 0 skips it.
        #[arg(long, default_value_t = DEFAULT_BOOTSTRAP_ROUNDS)]
        bootstrap: usize,
        /// Seed for the stability bootstrap.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Replay tournament formats and score them against the true ranking.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads; does not change any output.
        #[arg(long)]
        workers: Option<usize>,
    },
}

/// Failure split by exit code.
#[derive(Debug)]
pub enum Failure {
    Invalid(anyhow::Error),
    Runtime(anyhow::Error),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Invalid(_) => 2,
            Failure::Runtime(_) => 1,
        }
    }
}

pub trait FailureExt<T> {
    fn invalid(self) -> Result<T, Failure>;
    fn runtime(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> FailureExt<T> for Result<T, E> {
    fn invalid(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Invalid(e.into()))
    }

    fn runtime(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Runtime(e.into()))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen {
            model,
            games,
            seed,
            out,
        } => commands::gen(&model, games as usize, seed, &out),
        Command::Truth {
            games,
            scheme,
            bootstrap,
            seed,
            out,
        } => commands::truth(&games, scheme, bootstrap, seed, &out),
        Command::Simulate {
            config,
            out,
            workers,
        } => {
            let workers = workers
                .or_else(|| std::thread::available_parallelism().ok().map(usize::from))
                .unwrap_or(1);
            commands::simulate(&config, &out, workers)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            let (Failure::Invalid(e) | Failure::Runtime(e)) = &failure;
            eprintln!("error: {e:#}");
            ExitCode::from(failure.exit_code())
        }
    }
}

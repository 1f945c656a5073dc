//! `qzmetro`: batch driver for the dephasing simulator and the sensitivity
//! analytics.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 configuration error, 3 time
//! grid too coarse for the fringe, 4 oracle deviation above threshold.

// TOML accepts nan, and the negated checks in config validation catch it
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qzmetro_core::Error;

#[derive(Debug, Parser)]
#[command(name = "qzmetro", version, about = "Colored-noise Ramsey simulator and Zeno-regime metrology")]
struct Cli {
    /// TOML config, or any output file carrying an echoed `#@` header.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Master seed (overrides the config).
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,

    /// Worker threads; results do not depend on it.
    #[arg(long, global = true, value_name = "N")]
    workers: Option<usize>,

    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    out: PathBuf,

    /// paper-n7, paper-scaling or noiseless-scaling.
    #[arg(long, global = true, value_name = "NAME")]
    preset: Option<String>,

    /// Override one config key; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    sets: Vec<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// J(ω), F(ω_j), Γ(t) and γ(t) tables.
    Spectrum,
    /// Monte Carlo Ramsey curves with fitted envelopes.
    Ramsey,
    /// δω₀(t) curves and optimal measurement points.
    Sensitivity,
    /// Scaling of r and δω_e with qubit number.
    Scaling,
    /// Monte Carlo against the master-equation oracle.
    OracleCheck,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{0}")]
    Grid(String),
    #[error("{0}")]
    Oracle(String),
    #[error("{0}")]
    Runtime(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Grid(_) => 3,
            CliError::Oracle(_) => 4,
            CliError::Runtime(_) | CliError::Io(_) => 1,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Grid { .. } => CliError::Grid(e.to_string()),
            Error::Config(_)
            | Error::Domain(_)
            | Error::Range { .. }
            | Error::Index { .. }
            | Error::Calibration(_) => CliError::Config(e.to_string()),
            Error::Contract(_)
            | Error::Integration { .. }
            | Error::NoOptimum { .. }
            | Error::DegenerateFit(_) => CliError::Runtime(e.to_string()),
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = config::load(config::Sources {
        preset: cli.preset.as_deref(),
        file: cli.config.as_deref(),
        sets: &cli.sets,
        seed: cli.seed,
    })?;
    let out = commands::Output::new(&cli.out, &cfg, command_name(cli.command))?;
    let go = || match cli.command {
        Command::Spectrum => commands::spectrum(&cfg, &out),
        Command::Ramsey => commands::ramsey(&cfg, &out),
        Command::Sensitivity => commands::sensitivity(&cfg, &out),
        Command::Scaling => commands::scaling(&cfg, &out),
        Command::OracleCheck => commands::oracle_check(&cfg, &out),
    };
    match cli.workers {
        Some(0) => Err(CliError::Config("--workers must be ≥ 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Runtime(e.to_string()))?
            .install(go),
        None => go(),
    }
}

fn command_name(c: Command) -> &'static str {
    match c {
        Command::Spectrum => "spectrum",
        Command::Ramsey => "ramsey",
        Command::Sensitivity => "sensitivity",
        Command::Scaling => "scaling",
        Command::OracleCheck => "oracle-check",
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qzmetro: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

//! `hdcharge`: grid-impact and mitigation-sizing studies for heavy-duty
//! charging stations, driven by one JSON config and one master seed.
//!
//! Exit codes: 0 success, 1 computation failure, 2 usage or config error.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::RunConfig;

#[derive(Debug, Parser)]
#[command(
    name = "hdcharge",
    version,
    about = "Heavy-duty EV charging grid impact and mitigation sizing"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration; omitted keys take defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed, overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory, overrides the config (default `out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Bundled feeder name or feeder JSON path, overrides the config.
    #[arg(long, global = true)]
    feeder: Option<String>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Steady-state power flow at one operating point.
    Solve,
    /// Voltage-to-load sensitivity matrices.
    Vlsm,
    /// Best/good/worst station locations.
    Rank,
    /// Monte Carlo charging-station load profiles.
    Station,
    /// Scenario table and hosting bars for one bundled feeder.
    Hosting,
    /// Closed-form charger/PV/storage sizing and its cost curve.
    Size,
    /// Storage-per-PV coefficients from the design chain.
    FitAb,
    /// PV-ES-charger dispatch and its effect on violations.
    Dispatch,
    /// Full scenario matrix over the configured feeders.
    Matrix,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Compute(hdcharge_core::Error),
}

impl CliError {
    pub fn config(field: &str, e: hdcharge_core::Error) -> Self {
        CliError::Usage(format!("{field}: {e}"))
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Compute(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Compute(e) => write!(f, "{e}"),
        }
    }
}

impl From<hdcharge_core::Error> for CliError {
    fn from(e: hdcharge_core::Error) -> Self {
        CliError::Compute(e)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = cli.out {
        cfg.out_dir = Some(out);
    }
    if let Some(feeder) = cli.feeder {
        cfg.feeder = Some(feeder);
    }
    cfg.validate()?;
    let ctx = commands::Context::new(cfg)?;
    match cli.command {
        Command::Solve => commands::solve(&ctx),
        Command::Vlsm => commands::vlsm(&ctx),
        Command::Rank => commands::rank(&ctx),
        Command::Station => commands::station(&ctx),
        Command::Hosting => commands::hosting(&ctx),
        Command::Size => commands::size(&ctx),
        Command::FitAb => commands::fit_ab(&ctx),
        Command::Dispatch => commands::dispatch(&ctx),
        Command::Matrix => commands::matrix(&ctx),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

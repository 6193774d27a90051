//! `halotouch`: simulate, calibrate, run and evaluate.
//!
//! Exit codes: 0 ok, 2 invalid input, 64 usage, 70 internal failure.

mod assets;
mod calibrate;
mod config;
mod eval;
mod gbrt;
mod manifest;
mod run;
mod simulate;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::Settings;

pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_USAGE: u8 = 64;
pub const EXIT_INTERNAL: u8 = 70;

/// A failed command: bad input (exit 2) or an internal fault (exit 70).
#[derive(Debug)]
pub enum Failure {
    Validation(anyhow::Error),
    Internal(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Validation(e.into())
    }
}

pub type CliResult<T> = std::result::Result<T, Failure>;

pub trait Internal<T> {
    fn internal(self, what: &str) -> CliResult<T>;
}

impl<T, E: Into<anyhow::Error>> Internal<T> for std::result::Result<T, E> {
    fn internal(self, what: &str) -> CliResult<T> {
        self.map_err(|e| Failure::Internal(e.into().context(what.to_string())))
    }
}

#[derive(Debug, Parser)]
#[command(name = "halotouch", version, about = "Halo-based touch sensing on time-of-flight depth streams")]
pub struct Cli {
    /// Seed for every random draw (simulation noise, sampling, model splits).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// JSON file with pipeline, detector, extraction and boosting settings.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory outputs and the run manifest are written to.
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render a scenario into a depth stream, landmarks and ground truth.
    Simulate(simulate::SimulateArgs),
    /// Build a user profile from a recorded calibration session.
    Calibrate(calibrate::CalibrateArgs),
    /// Detect touches in a depth stream with a calibrated profile.
    Run(run::RunArgs),
    /// Score outputs against ground truth.
    #[command(subcommand)]
    Eval(eval::EvalCommand),
    /// Sweep camera yaw, pitch and distance and tabulate halo strength.
    Characterize(eval::CharacterizeArgs),
    /// Train and apply gradient-boosted regression models.
    #[command(subcommand)]
    Gbrt(gbrt::GbrtCommand),
    /// Print a bundled scenario or asset to stdout.
    Asset(assets::AssetArgs),
}

fn dispatch(cli: &Cli, args: &[String]) -> CliResult<()> {
    let settings = Settings::resolve(cli)?;
    match &cli.command {
        Command::Simulate(a) => simulate::simulate(&settings, a, args),
        Command::Calibrate(a) => calibrate::calibrate(&settings, a, args),
        Command::Run(a) => run::run(&settings, a, args),
        Command::Eval(c) => eval::eval(&settings, c, args),
        Command::Characterize(a) => eval::characterize(&settings, a, args),
        Command::Gbrt(c) => gbrt::gbrt(&settings, c, args),
        Command::Asset(a) => assets::print_asset(a),
    }
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    match dispatch(&cli, &args[1..]) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_VALIDATION)
        }
        Err(Failure::Internal(e)) => {
            eprintln!("internal error: {e:#}");
            ExitCode::from(EXIT_INTERNAL)
        }
    }
}

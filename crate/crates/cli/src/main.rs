//! `lipiso`: load finite metric spaces, fields and operators, run the
//! constructions and checks of `lipiso-core`, and write JSON or CSV reports.
//!
//! Exit codes: 0 on success, 1 on input errors, 2 when a checked property is
//! violated.

mod commands;
mod oracle;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "lipiso", version, about = "Executable metric geometry for order isomorphisms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InputFormat {
    Auto,
    Coordinates,
    Matrix,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Report destination: a file, or a directory for multi-file reports.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: OutputFormat,
}

#[derive(Debug, Clone, Args)]
pub struct SpaceArgs {
    /// Coordinate CSV, distance-matrix CSV or JSON space.
    #[arg(long)]
    pub space: PathBuf,
    /// Base point label (or index); defaults to the JSON base or the first point.
    #[arg(long)]
    pub base: Option<String>,
    #[arg(long, value_enum, default_value = "auto")]
    pub space_format: InputFormat,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check that a space is a valid finite metric space.
    Validate {
        #[command(flatten)]
        space: SpaceArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Witness constants for metric properties of a space or a family.
    Classify(commands::ClassifyArgs),
    /// The derived metric, rho, the net decomposition and its checks.
    Derive(commands::DeriveArgs),
    /// Extend prescribed values from a subset.
    Extend(commands::ExtendArgs),
    /// Seminorms, modulus profile and the f / xi isomorphism bounds of a field.
    Seminorm(commands::SeminormArgs),
    /// Order-isomorphism check of an operator file or an external command.
    IsoCheck(commands::IsoCheckArgs),
    /// Epsilon-step territories.
    Territories {
        #[command(flatten)]
        space: SpaceArgs,
        #[arg(long)]
        epsilon: f64,
        #[command(flatten)]
        common: Common,
    },
    /// A property evaluated across horizons of a family, with a trend verdict.
    FamilyScan(commands::FamilyScanArgs),
    /// The randomized invariant battery.
    VerifySuite(commands::SuiteArgs),
}

/// How a command ended.
pub enum Failure {
    Input(String),
    Violation(String),
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Input(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Validate { space, common } => commands::validate(&space, &common),
        Command::Classify(args) => commands::classify(&args),
        Command::Derive(args) => commands::derive(&args),
        Command::Extend(args) => commands::extend(&args),
        Command::Seminorm(args) => commands::seminorm(&args),
        Command::IsoCheck(args) => commands::iso_check(&args),
        Command::Territories { space, epsilon, common } => commands::territories(&space, epsilon, &common),
        Command::FamilyScan(args) => commands::family_scan(&args),
        Command::VerifySuite(args) => commands::verify_suite(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Violation(msg)) => {
            eprintln!("violation: {msg}");
            ExitCode::from(2)
        }
    }
}

//! Command line front end: parse channel, constraint, and extension records
//! from a config file or stdin, dispatch to the solvers, and emit human
//! tables or one JSON object per line.
//!
//! Exit codes: 0 pass, 1 check failure, 2 invalid input, 3 non-converged.

mod run;

use clap::{Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "chicap",
    version,
    about = "Chi-capacity of finite-dimensional quantum channels"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Config file with the command's input records; "-" or absent reads
    /// stdin.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Optimizer seed (default 0; overrides the config file).
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Optimizer restarts (default 6; overrides the config file).
    #[arg(long, global = true)]
    pub restarts: Option<usize>,

    /// Tolerance in bits for both value and certificate checks
    /// (default 1e-3; overrides the config file).
    #[arg(long, global = true)]
    pub tol: Option<f64>,

    /// Output mode (default table).
    #[arg(long, global = true, value_enum, default_value_t = OutputMode::Table)]
    pub output: OutputMode,

    /// Exit 1 when a settled check fails. Without it the additivity
    /// commands always exit 0 and only report.
    #[arg(long, global = true)]
    pub assert_proven: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputMode {
    /// Aligned human-readable values.
    Table,
    /// One JSON object per line.
    Records,
}

#[derive(Subcommand)]
pub enum Command {
    /// Constrained chi-capacity of one channel.
    Capacity,
    /// Certificate bound for a candidate ensemble; exit 0 iff certified.
    Certify,
    /// Extension capacity bracket checks, one row per index count.
    ShorCheck,
    /// Additivity gap reports on a concrete instance.
    Additivity,
    /// Joint capacity under an additive two-party constraint against the
    /// best split of the budget.
    WeakAdditivity,
    /// Constrained capacity as a function of the constraint bound.
    ProfileAlpha,
    /// Stress search for chi subadditivity violations.
    Search,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run::dispatch(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

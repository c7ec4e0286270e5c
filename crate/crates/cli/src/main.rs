//! `breather` command-line entry point.
//!
//! Exit codes: 0 success, 1 usage or configuration, 2 violated hypothesis,
//! 3 numerical failure.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use breather::Sign;
use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "breather", version, about = "Construct and verify radial curl-curl breathers")]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Nonlinearity exponent, p > 1 [default: 3]
    #[arg(long, global = true)]
    pub p: Option<f64>,
    /// Sign of the nonlinearity; overrides the sign in a profile file [default: plus]
    #[arg(long, global = true)]
    pub sign: Option<Sign>,
    /// `builtin` or the path of a JSON profile
    #[arg(long, global = true, default_value = "builtin")]
    pub profile: String,
    /// Builtin detuning amplitude
    #[arg(long, global = true)]
    pub a: Option<f64>,
    /// Builtin vanishing order at the origin
    #[arg(long, global = true)]
    pub m: Option<u32>,
    /// Builtin Gaussian rate
    #[arg(long, global = true)]
    pub beta: Option<f64>,
    /// Decay rate δ
    #[arg(long, global = true)]
    pub delta: Option<f64>,
    /// Largest accepted disagreement between independent period evaluations
    #[arg(long, global = true, default_value_t = 1e-8)]
    pub tol: f64,
    /// Output directory; tables go to stdout when omitted (construct defaults to `out`)
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for residual sample points
    #[arg(long, global = true, default_value_t = 7)]
    pub seed: u64,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Tabulate amplitude and period against orbit energy
    PeriodTable {
        /// Comma-separated ascending energies, starting at 0 by default
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        energies: Option<Vec<f64>>,
    },
    /// Check hypotheses, build the breather, export fields and verify residuals
    Construct,
    /// Sample periodic orbits and, for minus, the separatrix
    PhasePortrait {
        /// Comma-separated orbit energies
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        energies: Option<Vec<f64>>,
        /// Samples per curve
        #[arg(long, default_value_t = 200)]
        samples: usize,
    },
    /// Compare the inverse period map with its leading-order expansion
    ExpansionCheck {
        /// Number of sample periods
        #[arg(long, default_value_t = 25)]
        points: usize,
    },
}

/// Failure classes mapped onto the exit-code contract.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Hypothesis(String),
    Numerical(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Hypothesis(_) => 2,
            Failure::Numerical(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Hypothesis(m) | Failure::Numerical(m) => m,
        }
    }
}

impl From<breather::Error> for Failure {
    fn from(e: breather::Error) -> Self {
        match e {
            breather::Error::Config(_) => Failure::Usage(e.to_string()),
            breather::Error::Hypothesis { .. } => Failure::Hypothesis(e.to_string()),
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(format!("i/o error: {e}"))
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Usage(format!("csv error: {e}"))
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Usage(format!("json error: {e}"))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { 1 } else { 0 });
        }
    };
    let result = match &cli.command {
        Command::PeriodTable { energies } => commands::period_table(&cli.common, energies.as_deref()),
        Command::Construct => commands::construct(&cli.common),
        Command::PhasePortrait { energies, samples } => {
            commands::phase_portrait(&cli.common, energies.as_deref(), *samples)
        }
        Command::ExpansionCheck { points } => commands::expansion_check(&cli.common, *points),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

//! Library side of the `breather-forge` command-line tool: argument
//! definitions, scenario configuration and the subcommands.
//!
//! Every command returns an [`Outcome`] holding the text to write and, for
//! hypothesis or verification failures, the error that decides the exit code.
//! Input errors abort before anything is written.

pub mod commands;
pub mod config;
pub mod output;

use std::f64::consts::TAU;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use thiserror::Error;

pub use commands::execute;
pub use config::{Scenario, ScenarioConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("hypothesis check failed: {0}")]
    Hypothesis(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("writing {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn input(msg: impl Into<String>) -> Self {
        CliError::Input(msg.into())
    }

    /// Input error attributed to a config key.
    pub fn key(key: &str, msg: impl std::fmt::Display) -> Self {
        CliError::Input(format!("config key `{key}`: {msg}"))
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) | CliError::Io { .. } => 2,
            CliError::Hypothesis(_) => 3,
            CliError::Verification(_) => 4,
        }
    }
}

/// Result of a command that got as far as producing output.
#[derive(Debug)]
pub struct Outcome {
    pub body: String,
    /// JSON written next to the main output by `breather`.
    pub sidecar: Option<String>,
    pub failure: Option<CliError>,
}

impl Outcome {
    fn ok(body: String) -> Self {
        Self {
            body,
            sidecar: None,
            failure: None,
        }
    }

    pub fn exit_code(&self) -> i32 {
        self.failure.as_ref().map_or(0, CliError::exit_code)
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "breather-forge",
    version,
    about = "Construct and check radial breathers of the curl-curl wave equation"
)]
pub struct Cli {
    /// Scenario configuration (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Built-in scenario; takes precedence over --config.
    #[arg(long, global = true)]
    pub scenario: Option<String>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Real,
    Monochromatic,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate amplitude and period against the energy level.
    PeriodMap {
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        e_min: f64,
        #[arg(long, default_value_t = 10.0, allow_negative_numbers = true)]
        e_max: f64,
        #[arg(long, default_value_t = 101)]
        n: usize,
    },
    /// Sample closed orbits of the reduced oscillator over one period.
    PhasePortrait {
        /// Comma-separated energy levels.
        #[arg(long, value_delimiter = ',', default_values_t = [0.1, 1.9, 10.0], allow_negative_numbers = true)]
        e_list: Vec<f64>,
        #[arg(long, default_value_t = 201)]
        samples: usize,
    },
    /// Check the hypotheses on the radial coefficients.
    Check,
    /// Tabulate the breather on the (r, t) grid, or the monochromatic profile.
    Breather {
        #[arg(long, value_enum, default_value_t = Mode::Real)]
        mode: Mode,
        /// Sidecar JSON path; defaults to <out>.json when --out is given.
        #[arg(long)]
        sidecar: Option<PathBuf>,
    },
    /// Run the residual, curl, cross-oracle and monochromatic checks.
    Verify {
        /// Multiplies ṽ_p in the radial residual; any value other than 1
        /// corrupts the construction and should be detected.
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        vp_scale: f64,
    },
    /// Fit the power law of the inverse period map near 2π.
    Asymptotics {
        #[arg(long, default_value_t = TAU - 1e-2)]
        window_lo: f64,
        #[arg(long, default_value_t = TAU - 1e-4)]
        window_hi: f64,
    },
}

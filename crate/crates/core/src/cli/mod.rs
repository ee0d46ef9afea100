//! Command-line front end: `simulate`, `estimate`, `ensemble` and `compare`.
//!
//! Every command reads an optional JSON config, applies flag overrides on top
//! and writes one machine-readable file. Output bytes depend only on the
//! config and the seed.

mod commands;
pub mod config;
pub mod files;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

pub use config::{RunConfig, StudyConfig};

use crate::error::{Error, Result};
use crate::hilbert::StateSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Pure-state maximum likelihood (rank-one POMs).
    Mle,
    /// Unconstrained linear inversion.
    Inversion,
    /// Frequency-weighted mixture of orthogonal projectors.
    Orthogonal,
    /// Closed form for one or two equally frequent outcomes.
    DoubleAnalytic,
}

#[derive(Debug, Parser)]
#[command(name = "qtomo", version, about = "Maximum-likelihood quantum state reconstruction")]
pub struct Cli {
    #[command(flatten)]
    pub shared: SharedArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct SharedArgs {
    /// JSON run configuration; flags override its keys.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Fock-space truncation.
    #[arg(long, global = true)]
    pub dim: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Convergence tolerance of the estimator.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true)]
    pub max_iter: Option<usize>,
    /// Initial step of the damped fixed-point iteration, in (0, 1].
    #[arg(long, global = true)]
    pub damping: Option<f64>,
    /// Output file; standard output when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Also write every POM effect, as a custom POM spec, to this file.
    #[arg(long, global = true)]
    pub dump_effects: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a measurement record from a true state.
    Simulate {
        /// POM spec file.
        #[arg(long)]
        pom: Option<PathBuf>,
        /// Number of detections.
        #[arg(long)]
        n: Option<u64>,
    },
    /// Reconstruct a state from a measurement record.
    Estimate {
        #[arg(long)]
        record: Option<PathBuf>,
        #[arg(long, value_enum)]
        method: Option<Method>,
        /// POM spec file; required for CSV records.
        #[arg(long)]
        pom: Option<PathBuf>,
    },
    /// Monte Carlo average of estimates over sampled records, and the
    /// positivity study when the config defines one.
    Ensemble {
        #[arg(long)]
        pom: Option<PathBuf>,
        /// Detections per dataset.
        #[arg(long)]
        n: Option<u64>,
        #[arg(long)]
        datasets: Option<usize>,
        /// Study table; defaults to the output path with a `.csv` extension.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Tabulate likelihoods, fidelities and eigenvalues of estimate files.
    Compare {
        #[arg(required = true)]
        estimates: Vec<PathBuf>,
        #[arg(long)]
        record: Option<PathBuf>,
        #[arg(long)]
        pom: Option<PathBuf>,
        /// State file of the true state.
        #[arg(long)]
        truth: Option<PathBuf>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate { .. } => "simulate",
            Command::Estimate { .. } => "estimate",
            Command::Ensemble { .. } => "ensemble",
            Command::Compare { .. } => "compare",
        }
    }
}

/// How a command that produced its output ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success,
    /// Output written, but the estimator did not certify its result.
    NotConverged,
}

/// Config file merged with the flags of this invocation.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.shared.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    cfg.check_command(cli.command.name())?;
    let s = &cli.shared;
    macro_rules! flag {
        ($field:ident, $value:expr) => {
            if let Some(v) = $value {
                cfg.$field = Some(v.clone());
            }
        };
    }
    flag!(dim, s.dim);
    flag!(seed, s.seed);
    flag!(tol, s.tol);
    flag!(max_iter, s.max_iter);
    flag!(damping, s.damping);
    flag!(out, &s.out);
    let pom_flag = match &cli.command {
        Command::Simulate { pom, n } => {
            flag!(n, n);
            pom
        }
        Command::Estimate { record, method, pom } => {
            flag!(record, record);
            flag!(method, method);
            pom
        }
        Command::Ensemble { pom, n, datasets, .. } => {
            flag!(n, n);
            flag!(datasets, datasets);
            pom
        }
        Command::Compare { record, pom, truth, .. } => {
            flag!(record, record);
            if let Some(path) = truth {
                cfg.state = Some(StateSpec::MatrixFile { path: path.clone() });
            }
            pom
        }
    };
    if let Some(path) = pom_flag {
        cfg.pom = None;
        cfg.pom_file = Some(path.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn run(cli: &Cli) -> Result<Status> {
    let cfg = resolve_config(cli)?;
    let dump = cli.shared.dump_effects.as_deref();
    match &cli.command {
        Command::Simulate { .. } => commands::simulate(&cfg, dump),
        Command::Estimate { .. } => commands::estimate(&cfg, dump),
        Command::Ensemble { csv, .. } => commands::ensemble(&cfg, dump, csv.as_deref()),
        Command::Compare { estimates, .. } => commands::compare(&cfg, dump, estimates),
    }
}

/// Process exit code of a failed command: 2 for configuration and input
/// errors, 3 for numerical non-convergence, 4 for unsupported measurements.
pub fn exit_code(err: &Error) -> u8 {
    match err {
        Error::UnsupportedPom(_) | Error::NonOrthogonalPom => 4,
        Error::TooManyExclusions { .. } => 3,
        _ => 2,
    }
}

/// Exit code of a command that finished.
pub fn status_code(status: Status) -> u8 {
    match status {
        Status::Success => 0,
        Status::NotConverged => 3,
    }
}

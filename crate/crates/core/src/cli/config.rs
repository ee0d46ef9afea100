//! Run configuration: one JSON file plus command-line overrides. Flags win.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::Method;
use crate::ensemble::SampleSize;
use crate::error::{Error, Result};
use crate::estimator::MleOptions;
use crate::hilbert::StateSpec;
use crate::measurement::PomSpec;

/// Every key a config file may carry. Paths are relative to the working
/// directory, like the flags that override them.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Optional guard: when present it must name the subcommand being run.
    pub command: Option<String>,
    pub pom: Option<PomSpec>,
    pub pom_file: Option<PathBuf>,
    pub state: Option<StateSpec>,
    pub dim: Option<usize>,
    pub seed: Option<u64>,
    /// Detections per record (simulate) or per dataset (ensemble).
    pub n: Option<u64>,
    pub datasets: Option<usize>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub damping: Option<f64>,
    pub out: Option<PathBuf>,
    pub record: Option<PathBuf>,
    pub method: Option<Method>,
    pub study: Option<StudyConfig>,
}

/// Grid of the positivity-violation study run by `ensemble`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub dims: Vec<usize>,
    pub ns: Vec<SampleSize>,
    pub trials: usize,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("config {}: {e}", path.display())))
    }

    pub fn check_command(&self, name: &str) -> Result<()> {
        match &self.command {
            Some(c) if c != name => Err(Error::Config(format!(
                "config is for command \"{c}\", not \"{name}\""
            ))),
            _ => Ok(()),
        }
    }

    /// Estimator options with unset keys at their defaults.
    pub fn mle_options(&self) -> Result<MleOptions> {
        let d = MleOptions::default();
        let opts = MleOptions {
            tol: self.tol.unwrap_or(d.tol),
            max_iter: self.max_iter.unwrap_or(d.max_iter),
            damping: self.damping.unwrap_or(d.damping),
        };
        opts.validate()?;
        Ok(opts)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    /// The measurement named inline or by file, at the requested dimension.
    pub fn pom_spec(&self) -> Result<Option<PomSpec>> {
        let spec = match (&self.pom, &self.pom_file) {
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "give either \"pom\" or \"pom_file\", not both".into(),
                ))
            }
            (Some(p), None) => Some(p.clone()),
            (None, Some(path)) => Some(load_pom_spec(path)?),
            (None, None) => None,
        };
        Ok(spec.map(|s| self.apply_dim(s)))
    }

    pub fn require_pom_spec(&self) -> Result<PomSpec> {
        self.pom_spec()?
            .ok_or_else(|| Error::Config("missing \"pom\" (or \"pom_file\", --pom)".into()))
    }

    pub fn apply_dim(&self, spec: PomSpec) -> PomSpec {
        match self.dim {
            Some(d) => spec.with_dim(d),
            None => spec,
        }
    }

    pub fn require_state(&self) -> Result<&StateSpec> {
        self.state
            .as_ref()
            .ok_or_else(|| Error::Config("missing \"state\"".into()))
    }

    pub fn require_n(&self) -> Result<u64> {
        match self.n {
            Some(0) => Err(Error::Config("\"n\" must be positive".into())),
            Some(n) => Ok(n),
            None => Err(Error::Config("missing \"n\" (or --n)".into())),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == Some(0) {
            return Err(Error::Config("\"dim\" must be positive".into()));
        }
        if self.datasets == Some(0) {
            return Err(Error::Config("\"datasets\" must be positive".into()));
        }
        if self.n == Some(0) {
            return Err(Error::Config("\"n\" must be positive".into()));
        }
        if let Some(s) = &self.study {
            if s.trials == 0 || s.dims.is_empty() || s.ns.is_empty() || s.dims.contains(&0) {
                return Err(Error::Config(
                    "\"study\" needs positive \"trials\" and non-empty positive \"dims\" and \"ns\""
                        .into(),
                ));
            }
        }
        self.mle_options().map(|_| ())
    }
}

pub fn load_pom_spec(path: &Path) -> Result<PomSpec> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read POM spec {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("POM spec {}: {e}", path.display())))
}

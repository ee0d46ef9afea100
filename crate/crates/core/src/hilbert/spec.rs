use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::serial::{ComplexPair, StateJson};
use super::{
    coherent_state, displaced_thermal, thermal_state, DensityMatrix, Ket, StateRef, C64,
};
use crate::error::{Error, Result};

/// An owned pure or mixed state.
#[derive(Debug, Clone, PartialEq)]
pub enum State {
    Pure(Ket),
    Mixed(DensityMatrix),
}

impl State {
    pub fn as_ref(&self) -> StateRef<'_> {
        match self {
            State::Pure(k) => StateRef::Pure(k),
            State::Mixed(r) => StateRef::Mixed(r),
        }
    }

    pub fn dim(&self) -> usize {
        self.as_ref().dim()
    }

    pub fn to_density(&self) -> DensityMatrix {
        self.as_ref().to_density()
    }

    pub fn from_json(json: &StateJson) -> Result<Self> {
        Ok(match json {
            StateJson::Ket(k) => State::Pure(k.to_ket()?),
            StateJson::Matrix(m) => State::Mixed(m.to_density()?),
        })
    }
}

impl<'a> From<&'a State> for StateRef<'a> {
    fn from(s: &'a State) -> Self {
        s.as_ref()
    }
}

/// Declarative description of a true state, resolved at a given truncation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateSpec {
    Fock {
        n: usize,
    },
    Coherent {
        alpha: ComplexPair,
    },
    Thermal {
        mean_n: f64,
    },
    DisplacedThermal {
        alpha: ComplexPair,
        mean_n: f64,
    },
    /// A `{"kind": "ket" | "matrix", ...}` state file.
    #[serde(alias = "matrix-file")]
    MatrixFile {
        path: PathBuf,
    },
}

impl StateSpec {
    pub fn build(&self, dim: usize) -> Result<State> {
        let c = |p: &ComplexPair| C64::new(p[0], p[1]);
        Ok(match self {
            StateSpec::Fock { n } => State::Pure(Ket::basis(*n, dim)?),
            StateSpec::Coherent { alpha } => State::Pure(coherent_state(c(alpha), dim)?.value),
            StateSpec::Thermal { mean_n } => State::Mixed(thermal_state(*mean_n, dim)?.value),
            StateSpec::DisplacedThermal { alpha, mean_n } => {
                State::Mixed(displaced_thermal(c(alpha), *mean_n, dim)?.value)
            }
            StateSpec::MatrixFile { path } => {
                let text = std::fs::read_to_string(path)?;
                let json: StateJson = serde_json::from_str(&text)?;
                if json.dim() != dim {
                    return Err(Error::Config(format!(
                        "state file {} has dim {}, expected {dim}",
                        path.display(),
                        json.dim()
                    )));
                }
                State::from_json(&json)?
            }
        })
    }
}

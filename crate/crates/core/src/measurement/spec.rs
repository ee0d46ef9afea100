use serde::de::{self, Deserializer};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use super::build::{
    disk_grid, pom_custom, pom_fock_projective, pom_heterodyne_grid, pom_quadrature_bins,
    uniform_phases, GridCell, DEFAULT_MAX_TRUNCATION,
};
use super::{Effect, EffectOperator, OutcomeId, Pom};
use crate::error::{Error, Result};
use crate::hilbert::serial::{ComplexPair, MatrixJson};
use crate::hilbert::{Ket, C64};

fn default_max_truncation() -> f64 {
    DEFAULT_MAX_TRUNCATION
}

/// Serializable description from which a POM is rebuilt deterministically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PomSpec {
    FockProjective {
        dim: usize,
    },
    HeterodyneGrid {
        dim: usize,
        grid: GridSpec,
        #[serde(default = "default_max_truncation")]
        max_truncation: f64,
    },
    QuadratureBins {
        dim: usize,
        phases: PhaseSpec,
        bin_edges: Vec<BinEdge>,
    },
    Custom {
        dim: usize,
        effects: Vec<CustomEffectSpec>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    Disk {
        #[serde(default)]
        center: ComplexPair,
        radius: f64,
        spacing: f64,
    },
    Points {
        points: Vec<ComplexPair>,
        areas: Vec<f64>,
    },
}

/// Either a count of evenly spaced phases on `[0, pi)` or an explicit list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PhaseSpec {
    Uniform(usize),
    List(Vec<f64>),
}

/// A bin edge; infinite edges are written as `"-inf"` / `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinEdge(pub f64);

impl Serialize for BinEdge {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            s.serialize_f64(self.0)
        } else if self.0 > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }
}

impl<'de> Deserialize<'de> for BinEdge {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(BinEdge(v)),
            Raw::Text(t) => match t.as_str() {
                "inf" | "+inf" => Ok(BinEdge(f64::INFINITY)),
                "-inf" => Ok(BinEdge(f64::NEG_INFINITY)),
                other => Err(de::Error::custom(format!("invalid bin edge {other:?}"))),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomEffectSpec {
    pub id: u32,
    #[serde(default = "one")]
    pub weight: f64,
    /// Rank-one effect `scale * |ket><ket|` (ket normalized on load).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ket: Option<Vec<ComplexPair>>,
    #[serde(default = "one")]
    pub scale: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<MatrixJson>,
}

fn one() -> f64 {
    1.0
}

impl PomSpec {
    pub fn dim(&self) -> usize {
        match self {
            PomSpec::FockProjective { dim }
            | PomSpec::HeterodyneGrid { dim, .. }
            | PomSpec::QuadratureBins { dim, .. }
            | PomSpec::Custom { dim, .. } => *dim,
        }
    }

    pub fn with_dim(mut self, new_dim: usize) -> Self {
        match &mut self {
            PomSpec::FockProjective { dim }
            | PomSpec::HeterodyneGrid { dim, .. }
            | PomSpec::QuadratureBins { dim, .. }
            | PomSpec::Custom { dim, .. } => *dim = new_dim,
        }
        self
    }

    pub fn build(&self) -> Result<Pom> {
        let pom = match self {
            PomSpec::FockProjective { dim } => return pom_fock_projective(*dim),
            PomSpec::HeterodyneGrid {
                dim,
                grid,
                max_truncation,
            } => {
                let cells = match grid {
                    GridSpec::Disk {
                        center,
                        radius,
                        spacing,
                    } => disk_grid(C64::new(center[0], center[1]), *radius, *spacing)?,
                    GridSpec::Points { points, areas } => {
                        if points.len() != areas.len() {
                            return Err(Error::Config(format!(
                                "grid has {} points but {} areas",
                                points.len(),
                                areas.len()
                            )));
                        }
                        points
                            .iter()
                            .zip(areas)
                            .map(|(p, a)| GridCell {
                                point: C64::new(p[0], p[1]),
                                area: *a,
                            })
                            .collect()
                    }
                };
                pom_heterodyne_grid(*dim, &cells, *max_truncation)?
            }
            PomSpec::QuadratureBins {
                dim,
                phases,
                bin_edges,
            } => {
                let phases = match phases {
                    PhaseSpec::Uniform(n) => uniform_phases(*n),
                    PhaseSpec::List(v) => v.clone(),
                };
                let edges: Vec<f64> = bin_edges.iter().map(|e| e.0).collect();
                pom_quadrature_bins(*dim, &phases, &edges)?
            }
            PomSpec::Custom { dim, effects } => {
                let effects = effects
                    .iter()
                    .map(|e| custom_effect(*dim, e))
                    .collect::<Result<Vec<_>>>()?;
                pom_custom(*dim, effects)?
            }
        };
        Ok(pom.with_spec(self.clone()))
    }
}

fn custom_effect(dim: usize, spec: &CustomEffectSpec) -> Result<Effect> {
    let operator = match (&spec.ket, &spec.matrix) {
        (Some(amps), None) => {
            if amps.len() != dim {
                return Err(Error::Config(format!(
                    "effect {} ket has {} amplitudes, expected {dim}",
                    spec.id,
                    amps.len()
                )));
            }
            let ket = Ket::from_amplitudes(amps.iter().map(|p| C64::new(p[0], p[1])).collect())?;
            EffectOperator::Rank1 {
                ket,
                scale: spec.scale,
            }
        }
        (None, Some(m)) => EffectOperator::General(m.to_hermitian()?),
        _ => {
            return Err(Error::Config(format!(
                "effect {} needs exactly one of \"ket\" or \"matrix\"",
                spec.id
            )))
        }
    };
    Ok(Effect {
        id: OutcomeId(spec.id),
        operator,
        weight: spec.weight,
        label: None,
    })
}

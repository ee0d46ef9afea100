//! Probability operator measures and forward outcome distributions.
//!
//! A [`Pom`] is an ordered list of weighted effects `w_i * Pi_i`. Continuous
//! measurements are discretized into cells whose measure is carried in the
//! weight; whatever probability falls outside the modelled outcome set is kept
//! as `residual_mass` instead of being renormalized away.

mod build;
mod spec;

use std::collections::HashMap;
use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{check_dims, eigh, HermitianOperator, Ket, StateRef, C64};

pub use build::{
    disk_grid, pom_custom, pom_fock_projective, pom_heterodyne_grid, pom_quadrature_bins,
    uniform_phases, GridCell, DEFAULT_MAX_TRUNCATION,
};
pub use spec::{BinEdge, CustomEffectSpec, GridSpec, PhaseSpec, PomSpec};

/// Tolerance for `sum_i w_i Pi_i <= 1` and for declaring a POM complete.
pub const COMPLETENESS_TOL: f64 = 1e-8;
/// Effects may dip this far below zero before being rejected.
pub const EFFECT_PSD_TOL: f64 = 1e-10;
/// Probabilities in `[-PROBABILITY_TOL, 0)` are clamped to zero.
pub const PROBABILITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OutcomeId(pub u32);

impl fmt::Display for OutcomeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Operator part of an effect.
#[derive(Debug, Clone, PartialEq)]
pub enum EffectOperator {
    /// `scale * |ket><ket|` with a normalized ket.
    Rank1 { ket: Ket, scale: f64 },
    General(HermitianOperator),
}

impl EffectOperator {
    pub fn dim(&self) -> usize {
        match self {
            EffectOperator::Rank1 { ket, .. } => ket.dim(),
            EffectOperator::General(h) => h.dim(),
        }
    }

    pub fn matrix(&self) -> DMatrix<C64> {
        match self {
            EffectOperator::Rank1 { ket, scale } => ket.projector().scale(*scale),
            EffectOperator::General(h) => h.matrix().clone(),
        }
    }

    /// `Tr(rho * Pi)` without the measure weight.
    pub fn expectation(&self, state: StateRef<'_>) -> Result<f64> {
        match self {
            EffectOperator::Rank1 { ket, scale } => Ok(scale * state.ket_expectation(ket)?),
            EffectOperator::General(h) => state.trace_with(h.matrix()),
        }
    }

    pub fn as_rank1(&self) -> Option<(&Ket, f64)> {
        match self {
            EffectOperator::Rank1 { ket, scale } => Some((ket, *scale)),
            EffectOperator::General(_) => None,
        }
    }

    fn min_eigenvalue(&self) -> f64 {
        match self {
            EffectOperator::Rank1 { scale, ket } => {
                if ket.dim() == 1 {
                    *scale
                } else {
                    scale.min(0.0)
                }
            }
            EffectOperator::General(h) => h.min_eigenvalue(),
        }
    }
}

/// Descriptive tag carried by generated effects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EffectLabel {
    FockLevel { n: usize },
    GridPoint { re: f64, im: f64 },
    QuadratureBin { phase: f64, lower: f64, upper: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Effect {
    pub id: OutcomeId,
    pub operator: EffectOperator,
    /// Measure weight of the outcome cell (1 for discrete outcomes).
    pub weight: f64,
    pub label: Option<EffectLabel>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PomKind {
    FockProjective,
    HeterodyneGrid,
    QuadratureBins,
    Custom,
}

/// An indexed family of weighted effects.
#[derive(Debug, Clone)]
pub struct Pom {
    dim: usize,
    kind: PomKind,
    effects: Vec<Effect>,
    index: HashMap<OutcomeId, usize>,
    completeness_defect: f64,
    empty_effects: Vec<OutcomeId>,
    spec: Option<PomSpec>,
}

impl Pom {
    /// Validates the effects and records how far `sum w_i Pi_i` is from the identity.
    pub fn from_effects(dim: usize, kind: PomKind, effects: Vec<Effect>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::DimensionTooSmall { min: 1, found: 0 });
        }
        if effects.is_empty() {
            return Err(Error::Empty("measurement has no effects".into()));
        }
        let mut index = HashMap::with_capacity(effects.len());
        let mut sum = DMatrix::<C64>::zeros(dim, dim);
        for (i, e) in effects.iter().enumerate() {
            check_dims(dim, e.operator.dim())?;
            if index.insert(e.id, i).is_some() {
                return Err(Error::DuplicateOutcome(e.id));
            }
            if !(e.weight >= 0.0 && e.weight.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "effect {} has weight {}",
                    e.id, e.weight
                )));
            }
            let min_eigenvalue = e.operator.min_eigenvalue();
            if min_eigenvalue < -EFFECT_PSD_TOL {
                return Err(Error::NegativeEffect {
                    id: e.id,
                    min_eigenvalue,
                });
            }
            match &e.operator {
                EffectOperator::Rank1 { ket, scale } => {
                    let v = ket.amplitudes();
                    let c = scale * e.weight;
                    for col in 0..dim {
                        let vc = v[col].conj() * c;
                        for row in 0..dim {
                            sum[(row, col)] += v[row] * vc;
                        }
                    }
                }
                EffectOperator::General(h) => sum += h.matrix().scale(e.weight),
            }
        }
        let (values, _) = eigh(&sum);
        let max = *values.last().expect("dim >= 1");
        if max > 1.0 + COMPLETENESS_TOL {
            return Err(Error::Overcomplete { max_eigenvalue: max });
        }
        let completeness_defect = values.iter().fold(0.0_f64, |a, v| a.max((1.0 - v).abs()));
        let empty_effects = effects
            .iter()
            .filter(|e| match &e.operator {
                EffectOperator::Rank1 { scale, .. } => *scale == 0.0,
                EffectOperator::General(h) => h.matrix().iter().all(|z| *z == C64::new(0.0, 0.0)),
            })
            .map(|e| e.id)
            .collect();
        Ok(Self {
            dim,
            kind,
            effects,
            index,
            completeness_defect,
            empty_effects,
            spec: None,
        })
    }

    pub(crate) fn with_spec(mut self, spec: PomSpec) -> Self {
        self.spec = Some(spec);
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> PomKind {
        self.kind
    }

    pub fn effects(&self) -> &[Effect] {
        &self.effects
    }

    pub fn len(&self) -> usize {
        self.effects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.effects.is_empty()
    }

    /// Spectral norm of `1 - sum_i w_i Pi_i`.
    pub fn completeness_defect(&self) -> f64 {
        self.completeness_defect
    }

    /// Effects that are identically zero (e.g. quadrature bins containing no eigenvalue).
    pub fn empty_effects(&self) -> &[OutcomeId] {
        &self.empty_effects
    }

    /// The serializable description this POM was built from, if any.
    pub fn spec(&self) -> Option<&PomSpec> {
        self.spec.as_ref()
    }

    pub fn position(&self, id: OutcomeId) -> Result<usize> {
        self.index.get(&id).copied().ok_or(Error::UnknownOutcome(id))
    }

    pub fn effect(&self, id: OutcomeId) -> Result<&Effect> {
        self.position(id).map(|i| &self.effects[i])
    }

    /// Weighted operator sum `sum_i w_i Pi_i`.
    pub fn operator_sum(&self) -> DMatrix<C64> {
        let mut sum = DMatrix::zeros(self.dim, self.dim);
        for e in &self.effects {
            sum += e.operator.matrix().scale(e.weight);
        }
        sum
    }
}

/// Outcome probabilities `p_i = w_i Tr(rho Pi_i)` aligned with the POM's effects.
#[derive(Debug, Clone)]
pub struct ForwardDistribution<'a> {
    pub pom: &'a Pom,
    pub probabilities: Vec<f64>,
    /// `1 - sum_i p_i`: probability of outcomes the POM does not model.
    pub residual_mass: f64,
    /// Number of slightly negative rounding values set to zero.
    pub clamped: usize,
}

impl ForwardDistribution<'_> {
    pub fn probability(&self, id: OutcomeId) -> Result<f64> {
        self.pom.position(id).map(|i| self.probabilities[i])
    }
}

/// Born-rule outcome distribution of `state` under `pom`.
pub fn forward<'s, 'p>(state: impl Into<StateRef<'s>>, pom: &'p Pom) -> Result<ForwardDistribution<'p>> {
    let state = state.into();
    check_dims(pom.dim(), state.dim())?;
    let mut probabilities = Vec::with_capacity(pom.len());
    let mut clamped = 0;
    for e in pom.effects() {
        let p = e.weight * e.operator.expectation(state)?;
        if p < -PROBABILITY_TOL {
            return Err(Error::NegativeProbability {
                id: e.id,
                probability: p,
            });
        }
        if p < 0.0 {
            clamped += 1;
            probabilities.push(0.0);
        } else {
            probabilities.push(p);
        }
    }
    if clamped > 0 {
        log::debug!("clamped {clamped} rounding-negative probabilities to zero");
    }
    let total: f64 = probabilities.iter().sum();
    Ok(ForwardDistribution {
        pom,
        probabilities,
        residual_mass: 1.0 - total,
        clamped,
    })
}

#[derive(Debug, Clone)]
pub struct CompletenessReport {
    pub operator_sum: HermitianOperator,
    /// Spectral norm of `1 - sum_i w_i Pi_i`.
    pub distance_from_identity: f64,
    pub complete: bool,
    pub tolerance: f64,
}

pub fn completeness_check(pom: &Pom) -> CompletenessReport {
    completeness_check_with(pom, COMPLETENESS_TOL)
}

pub fn completeness_check_with(pom: &Pom, tolerance: f64) -> CompletenessReport {
    let sum = pom.operator_sum();
    let (values, _) = eigh(&sum);
    let distance = values.iter().fold(0.0_f64, |a, v| a.max((1.0 - v).abs()));
    CompletenessReport {
        operator_sum: HermitianOperator::from_matrix_unchecked(sum),
        distance_from_identity: distance,
        complete: distance <= tolerance,
        tolerance,
    }
}

//! Frequency statistics, the likelihood functional and the bounds around it.
//!
//! Everything is evaluated per datum in log space: with `f_i` the relative
//! frequency of distinct outcome `i` and `p_i = w_i Tr(rho Pi_i)`,
//! `log L / n = sum_i f_i ln p_i`.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{check_dims, HermitianOperator, StateRef, C64};
use crate::measurement::{EffectOperator, OutcomeId, Pom};

/// Counts of distinct outcomes. Outcomes with zero count are not stored.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyTable {
    outcomes: Vec<OutcomeId>,
    frequencies: Vec<f64>,
    /// `None` for tables built from exact probabilities.
    counts: Option<Vec<u64>>,
}

/// One `{"id", "count"}` row of a measurement record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutcomeCount {
    pub id: OutcomeId,
    pub count: u64,
}

impl FrequencyTable {
    /// Tallies a multiset of observed outcomes.
    pub fn tabulate<I: IntoIterator<Item = OutcomeId>>(outcomes: I) -> Result<Self> {
        let mut tally: BTreeMap<OutcomeId, u64> = BTreeMap::new();
        for id in outcomes {
            *tally.entry(id).or_default() += 1;
        }
        Self::from_sorted_counts(tally)
    }

    /// From explicit `(id, count)` pairs; duplicate ids are an error.
    pub fn from_counts<I: IntoIterator<Item = OutcomeCount>>(rows: I) -> Result<Self> {
        let mut tally = BTreeMap::new();
        for r in rows {
            if tally.insert(r.id, r.count).is_some() {
                return Err(Error::DuplicateOutcome(r.id));
            }
        }
        Self::from_sorted_counts(tally)
    }

    fn from_sorted_counts(tally: BTreeMap<OutcomeId, u64>) -> Result<Self> {
        let tally: Vec<(OutcomeId, u64)> = tally.into_iter().filter(|(_, c)| *c > 0).collect();
        let n: u64 = tally.iter().map(|(_, c)| c).sum();
        if n == 0 {
            return Err(Error::Empty("no outcomes recorded".into()));
        }
        Ok(Self {
            outcomes: tally.iter().map(|(id, _)| *id).collect(),
            frequencies: tally.iter().map(|(_, c)| *c as f64 / n as f64).collect(),
            counts: Some(tally.iter().map(|(_, c)| *c).collect()),
        })
    }

    /// Idealized infinite-sample data: the frequencies are the given
    /// probabilities, renormalized to sum to one. Zero entries are dropped.
    pub fn from_probabilities<I: IntoIterator<Item = (OutcomeId, f64)>>(rows: I) -> Result<Self> {
        let mut tally: BTreeMap<OutcomeId, f64> = BTreeMap::new();
        for (id, p) in rows {
            if !(p >= 0.0 && p.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "probability {p} for outcome {id}"
                )));
            }
            if tally.insert(id, p).is_some() {
                return Err(Error::DuplicateOutcome(id));
            }
        }
        let total: f64 = tally.values().sum();
        if total <= 0.0 {
            return Err(Error::Empty("all probabilities are zero".into()));
        }
        let kept: Vec<(OutcomeId, f64)> = tally.into_iter().filter(|(_, p)| *p > 0.0).collect();
        Ok(Self {
            outcomes: kept.iter().map(|(id, _)| *id).collect(),
            frequencies: kept.iter().map(|(_, p)| p / total).collect(),
            counts: None,
        })
    }

    pub fn outcomes(&self) -> &[OutcomeId] {
        &self.outcomes
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn counts(&self) -> Option<&[u64]> {
        self.counts.as_deref()
    }

    /// Total number of detections; `None` for exact-probability tables.
    pub fn n(&self) -> Option<u64> {
        self.counts.as_ref().map(|c| c.iter().sum())
    }

    /// Number of distinct outcomes.
    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn rows(&self) -> Vec<OutcomeCount> {
        match &self.counts {
            Some(c) => self
                .outcomes
                .iter()
                .zip(c)
                .map(|(id, count)| OutcomeCount {
                    id: *id,
                    count: *count,
                })
                .collect(),
            None => Vec::new(),
        }
    }

    /// Checks that every outcome belongs to `pom`.
    pub fn check_against(&self, pom: &Pom) -> Result<()> {
        for id in &self.outcomes {
            pom.position(*id)?;
        }
        Ok(())
    }
}

/// Positive auxiliary weights `a_i`, gauged so that `max a_i = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxWeights(Vec<f64>);

impl AuxWeights {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("auxiliary weights".into()));
        }
        for (index, &value) in values.iter().enumerate() {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::NonPositiveWeight { index, value });
            }
        }
        let max = values.iter().cloned().fold(f64::MIN, f64::max);
        Ok(Self(values.into_iter().map(|v| v / max).collect()))
    }

    /// `a = f`, the choice that turns the Jensen bound into the Gibbs bound.
    pub fn from_frequencies(ft: &FrequencyTable) -> Self {
        Self::new(ft.frequencies().to_vec()).expect("stored frequencies are positive")
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Per-datum log-likelihood.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LikelihoodValue {
    /// `sum_i f_i ln p_i` with measure-weighted probabilities; `-inf` when an
    /// observed outcome has probability zero.
    pub log_likelihood_per_datum: f64,
    /// `sum_i f_i ln(w_i s_i)`: the state-independent part contributed by cell
    /// weights and effect normalizations. Subtract it to compare across grids.
    pub measure_offset: f64,
    pub n: Option<u64>,
}

impl LikelihoodValue {
    /// Likelihood with the measure constant removed.
    pub fn intrinsic(&self) -> f64 {
        self.log_likelihood_per_datum - self.measure_offset
    }

    /// `L^{1/n}`.
    pub fn geometric_mean(&self) -> f64 {
        self.log_likelihood_per_datum.exp()
    }
}

/// Measure constant of each observed outcome: `w_i * scale_i` for rank-one
/// effects, `w_i` otherwise.
fn measure_constant(pom: &Pom, id: OutcomeId) -> Result<f64> {
    let e = pom.effect(id)?;
    Ok(match &e.operator {
        EffectOperator::Rank1 { scale, .. } => e.weight * scale,
        EffectOperator::General(_) => e.weight,
    })
}

pub fn log_likelihood<'s>(
    state: impl Into<StateRef<'s>>,
    pom: &Pom,
    ft: &FrequencyTable,
) -> Result<LikelihoodValue> {
    let state = state.into();
    check_dims(pom.dim(), state.dim())?;
    let mut total = 0.0;
    let mut offset = 0.0;
    for (id, f) in ft.outcomes().iter().zip(ft.frequencies()) {
        let e = pom.effect(*id)?;
        let p = e.weight * e.operator.expectation(state)?;
        total += if p > 0.0 { f * p.ln() } else { f64::NEG_INFINITY };
        offset += f * measure_constant(pom, *id)?.ln();
    }
    Ok(LikelihoodValue {
        log_likelihood_per_datum: total,
        measure_offset: offset,
        n: ft.n(),
    })
}

/// `R = sum_i (f_i / a_i) Pi_i`, with `Pi_i = |y_i><y_i|` (unit ket) for
/// rank-one effects and the effect operator otherwise.
pub fn r_operator(pom: &Pom, ft: &FrequencyTable, a: &AuxWeights) -> Result<HermitianOperator> {
    if a.len() != ft.len() {
        return Err(Error::DimensionMismatch {
            expected: ft.len(),
            found: a.len(),
        });
    }
    let dim = pom.dim();
    let mut r = DMatrix::<C64>::zeros(dim, dim);
    for ((id, f), ai) in ft.outcomes().iter().zip(ft.frequencies()).zip(a.values()) {
        let e = pom.effect(*id)?;
        let c = f / ai;
        match &e.operator {
            EffectOperator::Rank1 { ket, .. } => r += ket.projector().scale(c),
            EffectOperator::General(h) => r += h.matrix().scale(c),
        }
    }
    Ok(HermitianOperator::from_matrix_unchecked(r))
}

/// Both sides of the weighted arithmetic-geometric mean inequality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JensenGap {
    /// `prod_i (x_i / a_i)^{f_i}`.
    pub lhs: f64,
    /// `sum_i f_i x_i / a_i`.
    pub rhs: f64,
}

impl JensenGap {
    pub fn holds(&self, tol: f64) -> bool {
        self.lhs <= self.rhs + tol
    }
}

pub fn jensen_gap(x: &[f64], a: &[f64], f: &[f64]) -> Result<JensenGap> {
    if x.len() != a.len() || x.len() != f.len() {
        return Err(Error::InvalidArgument(format!(
            "vector lengths differ: x {}, a {}, f {}",
            x.len(),
            a.len(),
            f.len()
        )));
    }
    let mut log_lhs = 0.0;
    let mut rhs = 0.0;
    for ((&xi, &ai), &fi) in x.iter().zip(a).zip(f) {
        if !(ai > 0.0) {
            return Err(Error::InvalidArgument(format!("auxiliary value {ai} not positive")));
        }
        if fi == 0.0 {
            continue;
        }
        let q = xi / ai;
        log_lhs += if q > 0.0 { fi * q.ln() } else { f64::NEG_INFINITY };
        rhs += fi * q;
    }
    Ok(JensenGap {
        lhs: log_lhs.exp(),
        rhs,
    })
}

/// `sum_i f_i ln(f_i / x_i)`, non-negative for probability vectors.
pub fn gibbs_divergence(f: &[f64], x: &[f64]) -> f64 {
    f.iter()
        .zip(x)
        .filter(|(fi, _)| **fi > 0.0)
        .map(|(fi, xi)| {
            if *xi > 0.0 {
                fi * (fi / xi).ln()
            } else {
                f64::INFINITY
            }
        })
        .sum()
}

/// `ln prod_j f_j^{f_j}`.
pub fn log_upper_bound_state_independent(ft: &FrequencyTable) -> f64 {
    ft.frequencies().iter().map(|f| f * f.ln()).sum()
}

/// `prod_j f_j^{f_j}`: no state can exceed this per-datum likelihood on a
/// measurement with `sum_i w_i Pi_i <= 1`.
pub fn upper_bound_state_independent(ft: &FrequencyTable) -> f64 {
    log_upper_bound_state_independent(ft).exp()
}

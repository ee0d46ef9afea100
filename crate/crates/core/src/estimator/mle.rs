//! Pure-state maximum likelihood through the extremal equations
//! `R(a)|psi> = lambda|psi>` with `|<y_i|psi>|^2 / a_i` constant.
//!
//! The search alternates two phases. The first is a damped fixed point on the
//! auxiliary weights: `psi` is the top eigenvector of `R(a)` and `a` moves
//! towards the squared overlaps of `psi`, with the step halved whenever the
//! likelihood would drop. That iteration can crawl, so once it stalls the
//! current state is polished by a damped Newton ascent on the pure-state
//! likelihood. The polished state is then certified: with `a` set to its
//! overlaps, it must again be the top eigenvector of `R(a)`. A certified state
//! maximizes the likelihood over all density matrices. When certification
//! fails and no better pure state is found, the optimum is mixed and the
//! result is reported as not converged.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::ascent::{ascend, PureObjective};
use crate::error::{Error, Result};
use crate::hilbert::{eigh, Ket, DEGENERACY_GAP, C64};
use crate::likelihood::{log_likelihood, AuxWeights, FrequencyTable, LikelihoodValue};
use crate::measurement::{EffectOperator, Pom};

const PHASE1_MAX_STEPS: usize = 500;
const ETA_MIN: f64 = 1e-6;
const MAX_RESTARTS: usize = 8;
const SUBSPACE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MleOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub damping: f64,
}

impl Default for MleOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iter: 10_000,
            damping: 0.5,
        }
    }
}

impl MleOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::Config(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be positive".into()));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::Config(format!(
                "damping must lie in (0, 1], got {}",
                self.damping
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct MleSolution {
    pub psi: Ket,
    /// Auxiliary weights at the returned state, max-gauged.
    pub a: AuxWeights,
    /// Top eigenvalue of `R(a)` built with frequencies.
    pub lambda_top: f64,
    pub log_likelihood: LikelihoodValue,
    pub iterations: usize,
    /// `max_i |g_i - g| / g` with `g_i = |<y_i|psi>|^2 / a_i` and `g = sum_i f_i g_i`.
    pub residual: f64,
    pub degenerate: bool,
    pub converged: bool,
    /// Per-datum log-likelihood after every accepted step; non-decreasing.
    pub trace: Vec<f64>,
    /// Dimension of the space spanned by the detected kets.
    pub subspace_rank: usize,
}

impl MleSolution {
    /// The eigenvalue in the gauge `a_anchor = 1` with counts in place of
    /// frequencies, i.e. of `sum_i (n_i / a_i) |y_i><y_i|`.
    pub fn lambda_with_counts(&self, n: u64, anchor: usize) -> f64 {
        n as f64 * self.a.values()[anchor] * self.lambda_top
    }
}

/// Detected kets expressed in an orthonormal basis of their span, or in the
/// Fock basis when they span at least the whole space.
struct Problem {
    basis: Option<DMatrix<C64>>,
    kets: Vec<DVector<C64>>,
    f: Vec<f64>,
    offset: f64,
}

struct Top {
    lambda: f64,
    w: DVector<C64>,
    degenerate: bool,
}

pub(crate) fn rank1_kets(pom: &Pom, ft: &FrequencyTable) -> Result<Vec<Ket>> {
    // zero effects from empty bins can never be observed and are harmless
    let offending = pom
        .effects()
        .iter()
        .find(|e| e.operator.as_rank1().is_none() && !pom.empty_effects().contains(&e.id));
    if let Some(e) = offending {
        return Err(Error::UnsupportedPom(format!(
            "pure-state estimation needs rank-one effects; outcome {} is not rank one",
            e.id
        )));
    }
    ft.outcomes()
        .iter()
        .map(|id| match &pom.effect(*id)?.operator {
            EffectOperator::Rank1 { ket, .. } => Ok(ket.clone()),
            EffectOperator::General(_) => unreachable!("checked above"),
        })
        .collect()
}

impl Problem {
    fn new(pom: &Pom, ft: &FrequencyTable) -> Result<Self> {
        ft.check_against(pom)?;
        let kets = rank1_kets(pom, ft)?;
        let f = ft.frequencies().to_vec();
        let mut offset = 0.0;
        for (id, fi) in ft.outcomes().iter().zip(&f) {
            let e = pom.effect(*id)?;
            let (_, scale) = e.operator.as_rank1().expect("rank one");
            offset += fi * (e.weight * scale).ln();
        }
        let dim = pom.dim();
        let n = kets.len();
        if n >= dim {
            return Ok(Self {
                basis: None,
                kets: kets.into_iter().map(Ket::into_amplitudes).collect(),
                f,
                offset,
            });
        }
        let y = DMatrix::from_fn(dim, n, |r, c| kets[c].amplitudes()[r]);
        let svd = y.clone().svd(true, false);
        let u = svd.u.expect("left singular vectors requested");
        let smax = svd.singular_values.max();
        let keep: Vec<usize> = (0..n)
            .filter(|&i| svd.singular_values[i] > SUBSPACE_TOL * smax)
            .collect();
        let q = DMatrix::from_fn(dim, keep.len(), |r, c| u[(r, keep[c])]);
        let reduced = (0..n)
            .map(|i| q.adjoint() * y.column(i))
            .collect();
        Ok(Self {
            basis: Some(q),
            kets: reduced,
            f,
            offset,
        })
    }

    fn rank(&self) -> usize {
        self.kets[0].len()
    }

    fn objective(&self) -> PureObjective<'_> {
        PureObjective {
            kets: &self.kets,
            f: &self.f,
        }
    }

    fn lift(&self, w: &DVector<C64>) -> DVector<C64> {
        match &self.basis {
            Some(q) => q * w,
            None => w.clone(),
        }
    }

    fn r_matrix(&self, a: &[f64]) -> DMatrix<C64> {
        let m = self.rank();
        let mut r = DMatrix::<C64>::zeros(m, m);
        for ((k, f), ai) in self.kets.iter().zip(&self.f).zip(a) {
            r += (k * k.adjoint()).scale(f / ai);
        }
        r
    }

    /// Top eigenvector of `R(a)`. A degenerate top eigenvalue is resolved by
    /// maximizing the likelihood inside the top eigenspace, starting from the
    /// best of a few deterministic candidates.
    fn top(&self, a: &[f64], reference: Option<&DVector<C64>>, budget: usize) -> Top {
        let m = self.rank();
        let (values, vectors) = eigh(&self.r_matrix(a));
        let lambda = values[m - 1];
        let threshold = DEGENERACY_GAP * lambda.abs();
        let multiplet: Vec<usize> = (0..m).filter(|&i| lambda - values[i] < threshold).collect();
        if multiplet.len() == 1 {
            return Top {
                lambda,
                w: vectors.column(m - 1).into_owned(),
                degenerate: false,
            };
        }
        let e = DMatrix::from_fn(m, multiplet.len(), |r, c| vectors[(r, multiplet[c])]);
        let z: Vec<DVector<C64>> = self.kets.iter().map(|k| e.adjoint() * k).collect();
        let sub = PureObjective { kets: &z, f: &self.f };

        let mut candidates: Vec<DVector<C64>> = Vec::new();
        if let Some(r) = reference {
            let p = e.adjoint() * r;
            if p.norm() > 1e-6 {
                candidates.push(p);
            }
        }
        let mut spread = DVector::<C64>::zeros(multiplet.len());
        for (zi, fi) in z.iter().zip(&self.f) {
            let n = zi.norm();
            if n > 0.0 {
                spread += zi.scale(fi.sqrt() / n);
            }
        }
        if spread.norm() > 1e-12 {
            candidates.push(spread);
        }
        for j in 0..multiplet.len() {
            candidates.push(DVector::from_fn(multiplet.len(), |r, _| {
                C64::new(if r == j { 1.0 } else { 0.0 }, 0.0)
            }));
        }
        let start = candidates
            .iter()
            .map(|c| (sub.value(c), c))
            .fold(None::<(f64, &DVector<C64>)>, |best, (v, c)| match best {
                Some((bv, _)) if bv >= v => best,
                _ => Some((v, c)),
            })
            .map(|(_, c)| c.clone())
            .expect("at least one basis candidate");
        let refined = ascend(&sub, &start, budget);
        Top {
            lambda,
            w: (&e * refined.w).normalize(),
            degenerate: true,
        }
    }
}

fn gauge(values: &[f64]) -> Option<Vec<f64>> {
    let max = values.iter().cloned().fold(0.0, f64::max);
    if max > 0.0 && values.iter().all(|v| *v > 0.0) {
        Some(values.iter().map(|v| v / max).collect())
    } else {
        None
    }
}

/// Relative spread of `g_i = x_i / a_i` around its frequency-weighted mean.
fn residual(x: &[f64], a: &[f64], f: &[f64]) -> f64 {
    let g: Vec<f64> = x.iter().zip(a).map(|(x, a)| x / a).collect();
    let mean: f64 = g.iter().zip(f).map(|(g, f)| g * f).sum();
    if mean <= 0.0 {
        return f64::INFINITY;
    }
    g.iter().fold(0.0, |acc, gi| acc.max((gi - mean).abs() / mean))
}

pub fn estimate_mle_pure(pom: &Pom, ft: &FrequencyTable, opts: &MleOptions) -> Result<MleSolution> {
    opts.validate()?;
    let problem = Problem::new(pom, ft)?;
    let obj = problem.objective();
    let f = &problem.f;
    let budget = opts.max_iter;

    let mut a = gauge(f).expect("frequencies are positive");
    let first = problem.top(&a, None, budget);
    let mut w = first.w;
    let mut degenerate = first.degenerate;
    let mut value = obj.value(&w);
    let mut trace = vec![problem.offset + value];
    let mut iterations = 1;
    let mut eta = opts.damping;
    let mut accepted = 0;
    let mut res = residual(&obj.overlaps(&w), &a, f);
    let mut converged = res <= opts.tol;

    while !converged && iterations < opts.max_iter && eta >= ETA_MIN && accepted < PHASE1_MAX_STEPS {
        let Some(target) = gauge(&obj.overlaps(&w)) else {
            break;
        };
        let mixed: Vec<f64> = a
            .iter()
            .zip(&target)
            .map(|(ai, ti)| (1.0 - eta) * ai + eta * ti)
            .collect();
        let cand_a = gauge(&mixed).expect("convex combination of positive weights");
        let cand = problem.top(&cand_a, Some(&w), budget);
        let cand_value = obj.value(&cand.w);
        iterations += 1;
        if cand_value >= value {
            a = cand_a;
            w = cand.w;
            degenerate = cand.degenerate;
            value = cand_value;
            trace.push(problem.offset + value);
            accepted += 1;
            eta = (2.0 * eta).min(opts.damping);
            res = residual(&obj.overlaps(&w), &a, f);
            converged = res <= opts.tol;
        } else {
            eta /= 2.0;
        }
    }

    let mut restarts = 0;
    while !converged && iterations < opts.max_iter && restarts < MAX_RESTARTS {
        restarts += 1;
        let polished = ascend(&obj, &w, opts.max_iter - iterations);
        iterations += polished.steps;
        for v in &polished.trace {
            trace.push(problem.offset + v);
        }
        if polished.value >= value {
            w = polished.w;
            value = polished.value;
        }
        let Some(fixed_a) = gauge(&obj.overlaps(&w)) else {
            break;
        };
        let cert = problem.top(&fixed_a, Some(&w), opts.max_iter);
        iterations += 1;
        let cert_value = obj.value(&cert.w);
        let cert_res = residual(&obj.overlaps(&cert.w), &fixed_a, f);
        a = fixed_a;
        res = cert_res;
        degenerate = cert.degenerate;
        if cert_res <= opts.tol {
            converged = true;
            if cert_value >= value {
                w = cert.w;
                value = cert_value;
                trace.push(problem.offset + value);
            }
        } else if cert_value > value {
            // a better pure state: polish again from there
            w = cert.w;
            value = cert_value;
            trace.push(problem.offset + value);
        } else {
            break;
        }
    }

    let x = obj.overlaps(&w);
    if let Some(final_a) = gauge(&x) {
        a = final_a;
    }
    let lambda_top = problem.top(&a, Some(&w), 0).lambda;
    let (psi, _) = Ket::normalize(problem.lift(&w))?;
    let first_ket = rank1_kets(pom, ft)?.swap_remove(0);
    let psi = psi.canonical_phase(Some(&first_ket));
    let log_likelihood = log_likelihood(&psi, pom, ft)?;
    if !converged {
        log::debug!("pure-state estimate not certified: residual {res:.3e} after {iterations} iterations");
    }
    Ok(MleSolution {
        psi,
        a: AuxWeights::new(a)?,
        lambda_top,
        log_likelihood,
        iterations,
        residual: res,
        degenerate,
        converged,
        trace,
        subspace_rank: problem.rank(),
    })
}

use std::fmt;
use std::io::Write;

use rayon::prelude::*;
use serde::de::{self, Deserializer};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use super::{Sampler, SamplingPlan};
use crate::error::Result;
use crate::estimator::{estimate_mle_pure, InversionSolver, MleOptions, NEGATIVITY_TOL};
use crate::hilbert::{fidelity, DensityMatrix, StateSpec};
use crate::measurement::PomSpec;

/// Detections per dataset, or `"exact"` for the infinite-sample limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleSize {
    Finite(u64),
    Exact,
}

impl fmt::Display for SampleSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SampleSize::Finite(n) => write!(f, "{n}"),
            SampleSize::Exact => f.write_str("exact"),
        }
    }
}

impl Serialize for SampleSize {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            SampleSize::Finite(n) => s.serialize_u64(*n),
            SampleSize::Exact => s.serialize_str("exact"),
        }
    }
}

impl<'de> Deserialize<'de> for SampleSize {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(u64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(0) => Err(de::Error::custom("sample size must be at least 1")),
            Raw::Num(n) => Ok(SampleSize::Finite(n)),
            Raw::Text(t) if t == "exact" => Ok(SampleSize::Exact),
            Raw::Text(t) => Err(de::Error::custom(format!("invalid sample size {t:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyPlan {
    pub state: StateSpec,
    pub pom: PomSpec,
    pub dims: Vec<usize>,
    pub ns: Vec<SampleSize>,
    pub trials: usize,
    pub seed: u64,
    #[serde(default)]
    pub mle: MleOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub dim: usize,
    pub n: SampleSize,
    pub trials: usize,
    pub inversion_violation_fraction: f64,
    pub mle_min_eig_min: f64,
    pub mean_fidelity: f64,
    pub mle_converged: usize,
    pub inversion_min_eigenvalues: Vec<f64>,
    pub mle_min_eigenvalues: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub seed: u64,
    pub options: MleOptions,
    pub rows: Vec<StudyRow>,
}

impl StudyReport {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "dim",
            "n",
            "trials",
            "inversion_violation_fraction",
            "mle_min_eig_min",
            "mean_fidelity",
        ])?;
        for r in &self.rows {
            w.write_record([
                r.dim.to_string(),
                r.n.to_string(),
                r.trials.to_string(),
                format!("{:.6}", r.inversion_violation_fraction),
                format!("{:.6e}", r.mle_min_eig_min),
                format!("{:.9}", r.mean_fidelity),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Seed of one `(dim, n)` cell, mixed so that neighbouring cells are unrelated.
fn cell_seed(seed: u64, dim: usize, n: SampleSize) -> u64 {
    let n = match n {
        SampleSize::Finite(n) => n,
        SampleSize::Exact => u64::MAX,
    };
    let mut z = seed ^ (dim as u64).rotate_left(32) ^ n.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

struct Trial {
    inversion_min: f64,
    mle_min: f64,
    fidelity: f64,
    converged: bool,
}

/// For each `(dim, n)`: the fraction of inversion reconstructions with a
/// negative eigenvalue, next to the smallest eigenvalue and mean fidelity of
/// the maximum-likelihood estimates on the same records.
pub fn positivity_violation_study(plan: &StudyPlan) -> Result<StudyReport> {
    plan.mle.validate()?;
    let mut rows = Vec::new();
    for &dim in &plan.dims {
        let truth = plan.state.build(dim)?.to_density();
        let pom = plan.pom.clone().with_dim(dim).build()?;
        let solver = InversionSolver::new(&pom)?;
        for &n in &plan.ns {
            let (per_dataset, trials) = match n {
                SampleSize::Finite(k) => (k, plan.trials),
                SampleSize::Exact => (1, 1),
            };
            let sampling = SamplingPlan::new(
                truth.clone(),
                pom.clone(),
                per_dataset,
                trials,
                cell_seed(plan.seed, dim, n),
            )?;
            let sampler = Sampler::new(&sampling)?;
            let results: Vec<Trial> = (0..trials as u64)
                .into_par_iter()
                .map(|t| {
                    let ft = match n {
                        SampleSize::Finite(_) => sampler.sample_record(t),
                        SampleSize::Exact => sampler.exact_record()?,
                    };
                    let inv = solver.solve(&pom, &ft)?;
                    let mle = estimate_mle_pure(&pom, &ft, &plan.mle)?;
                    Ok(Trial {
                        inversion_min: inv.min_eigenvalue,
                        mle_min: DensityMatrix::from_pure(&mle.psi).min_eigenvalue(),
                        fidelity: fidelity(&mle.psi, &truth)?,
                        converged: mle.converged,
                    })
                })
                .collect::<Result<_>>()?;
            let violations = results
                .iter()
                .filter(|t| t.inversion_min < -NEGATIVITY_TOL)
                .count();
            rows.push(StudyRow {
                dim,
                n,
                trials,
                inversion_violation_fraction: violations as f64 / trials as f64,
                mle_min_eig_min: results.iter().map(|t| t.mle_min).fold(f64::INFINITY, f64::min),
                mean_fidelity: results.iter().map(|t| t.fidelity).sum::<f64>() / trials as f64,
                mle_converged: results.iter().filter(|t| t.converged).count(),
                inversion_min_eigenvalues: results.iter().map(|t| t.inversion_min).collect(),
                mle_min_eigenvalues: results.iter().map(|t| t.mle_min).collect(),
            });
        }
    }
    Ok(StudyReport {
        seed: plan.seed,
        options: plan.mle,
        rows,
    })
}

//! Seeded sampling of measurement records and Monte Carlo averages of
//! per-dataset estimates.
//!
//! Every dataset draws from its own ChaCha stream selected by
//! `(seed, dataset_index)`, so results do not depend on how datasets are
//! scheduled across threads. Averages are accumulated in dataset order with
//! compensated summation.

mod study;

use nalgebra::DMatrix;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimator::{estimate_mle_pure, MleOptions};
use crate::hilbert::{check_dims, DensityMatrix, Ket, C64};
use crate::likelihood::FrequencyTable;
use crate::measurement::{forward, OutcomeId, Pom};

pub use study::{positivity_violation_study, SampleSize, StudyPlan, StudyReport, StudyRow};

/// Largest probability mass the POM may leave unmodelled before sampling is refused.
pub const RESIDUAL_MASS_LIMIT: f64 = 0.01;
/// Largest fraction of non-converged estimates an ensemble average tolerates.
pub const MAX_EXCLUDED_FRACTION: f64 = 0.05;

#[derive(Debug, Clone)]
pub struct SamplingPlan {
    pub true_state: DensityMatrix,
    pub pom: Pom,
    pub n_per_dataset: u64,
    pub n_datasets: usize,
    pub seed: u64,
}

impl SamplingPlan {
    pub fn new(
        true_state: DensityMatrix,
        pom: Pom,
        n_per_dataset: u64,
        n_datasets: usize,
        seed: u64,
    ) -> Result<Self> {
        check_dims(pom.dim(), true_state.dim())?;
        if n_per_dataset == 0 || n_datasets == 0 {
            return Err(Error::InvalidArgument(
                "n_per_dataset and n_datasets must be at least 1".into(),
            ));
        }
        Ok(Self {
            true_state,
            pom,
            n_per_dataset,
            n_datasets,
            seed,
        })
    }
}

/// Outcome sampler with the forward distribution computed once.
#[derive(Debug, Clone)]
pub struct Sampler {
    ids: Vec<OutcomeId>,
    probabilities: Vec<f64>,
    index: WeightedIndex<f64>,
    residual_mass: f64,
    n: u64,
    seed: u64,
}

impl Sampler {
    pub fn new(plan: &SamplingPlan) -> Result<Self> {
        let dist = forward(&plan.true_state, &plan.pom)?;
        if dist.residual_mass >= RESIDUAL_MASS_LIMIT {
            return Err(Error::ResidualMassTooLarge {
                residual: dist.residual_mass,
                limit: RESIDUAL_MASS_LIMIT,
            });
        }
        if dist.residual_mass.abs() > 1e-12 {
            log::info!(
                "renormalizing away residual probability mass {:.3e}",
                dist.residual_mass
            );
        }
        let index = WeightedIndex::new(&dist.probabilities)
            .map_err(|e| Error::InvalidState(format!("cannot sample outcomes: {e}")))?;
        let total: f64 = dist.probabilities.iter().sum();
        Ok(Self {
            ids: plan.pom.effects().iter().map(|e| e.id).collect(),
            probabilities: dist.probabilities.iter().map(|p| p / total).collect(),
            index,
            residual_mass: dist.residual_mass,
            n: plan.n_per_dataset,
            seed: plan.seed,
        })
    }

    pub fn residual_mass(&self) -> f64 {
        self.residual_mass
    }

    /// Renormalized outcome probabilities aligned with the POM's effects.
    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    /// The random stream of one dataset.
    pub fn rng(&self, dataset_index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(dataset_index);
        rng
    }

    pub fn sample_record(&self, dataset_index: u64) -> FrequencyTable {
        let mut rng = self.rng(dataset_index);
        let draws = (0..self.n).map(|_| self.ids[self.index.sample(&mut rng)]);
        FrequencyTable::tabulate(draws).expect("at least one draw")
    }

    /// The infinite-sample record: forward probabilities as frequencies.
    pub fn exact_record(&self) -> Result<FrequencyTable> {
        FrequencyTable::from_probabilities(self.ids.iter().copied().zip(self.probabilities.iter().copied()))
    }
}

pub fn sample_record(plan: &SamplingPlan, dataset_index: u64) -> Result<FrequencyTable> {
    Ok(Sampler::new(plan)?.sample_record(dataset_index))
}

/// Compensated (Neumaier) running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.compensation
    }
}

#[derive(Debug, Clone)]
pub struct EnsembleResult {
    pub rho_mle: DensityMatrix,
    /// Monte Carlo standard error of each matrix entry.
    pub standard_error_per_entry: DMatrix<f64>,
    pub datasets_used: usize,
    pub datasets_excluded: usize,
    pub mean_photon_number: f64,
    pub mean_photon_number_se: f64,
    pub residual_mass: f64,
}

/// Averages `|psi><psi|` over sampled datasets for any pure-state estimator.
/// The estimator returns `None` for estimates that must be excluded.
pub fn ensemble_average<F>(plan: &SamplingPlan, estimator: F) -> Result<EnsembleResult>
where
    F: Fn(&FrequencyTable) -> Result<Option<Ket>> + Sync,
{
    let sampler = Sampler::new(plan)?;
    let estimates: Vec<Option<Ket>> = (0..plan.n_datasets as u64)
        .into_par_iter()
        .map(|i| estimator(&sampler.sample_record(i)))
        .collect::<Result<_>>()?;
    let kets: Vec<&Ket> = estimates.iter().flatten().collect();
    let excluded = plan.n_datasets - kets.len();
    if excluded as f64 > MAX_EXCLUDED_FRACTION * plan.n_datasets as f64 {
        return Err(Error::TooManyExclusions {
            excluded,
            total: plan.n_datasets,
        });
    }
    if excluded > 0 {
        log::warn!("{excluded} of {} estimates excluded as non-converged", plan.n_datasets);
    }
    let mut result = average_projectors(&kets)?;
    result.datasets_excluded = excluded;
    result.residual_mass = sampler.residual_mass();
    Ok(result)
}

fn average_projectors(kets: &[&Ket]) -> Result<EnsembleResult> {
    let n = kets.len();
    if n == 0 {
        return Err(Error::Empty("no estimates to average".into()));
    }
    let dim = kets[0].dim();
    let mut re = vec![NeumaierSum::default(); dim * dim];
    let mut im = vec![NeumaierSum::default(); dim * dim];
    let mut photons = NeumaierSum::default();
    let photon_numbers: Vec<f64> = kets
        .iter()
        .map(|k| {
            k.amplitudes()
                .iter()
                .enumerate()
                .map(|(j, z)| j as f64 * z.norm_sqr())
                .sum()
        })
        .collect();
    for (k, np) in kets.iter().zip(&photon_numbers) {
        let v = k.amplitudes();
        for r in 0..dim {
            for c in 0..dim {
                let z = v[r] * v[c].conj();
                re[r * dim + c].add(z.re);
                im[r * dim + c].add(z.im);
            }
        }
        photons.add(*np);
    }
    let nf = n as f64;
    let mean = DMatrix::from_fn(dim, dim, |r, c| {
        C64::new(re[r * dim + c].total() / nf, im[r * dim + c].total() / nf)
    });
    let mean_n = photons.total() / nf;

    let mut sq = vec![NeumaierSum::default(); dim * dim];
    let mut photon_sq = NeumaierSum::default();
    for (k, np) in kets.iter().zip(&photon_numbers) {
        let v = k.amplitudes();
        for r in 0..dim {
            for c in 0..dim {
                sq[r * dim + c].add((v[r] * v[c].conj() - mean[(r, c)]).norm_sqr());
            }
        }
        photon_sq.add((np - mean_n).powi(2));
    }
    let denom = if n > 1 { nf * (nf - 1.0) } else { f64::INFINITY };
    let standard_error_per_entry =
        DMatrix::from_fn(dim, dim, |r, c| (sq[r * dim + c].total() / denom).sqrt());
    Ok(EnsembleResult {
        rho_mle: DensityMatrix::new(mean)?,
        standard_error_per_entry,
        datasets_used: n,
        datasets_excluded: 0,
        mean_photon_number: mean_n,
        mean_photon_number_se: (photon_sq.total() / denom).sqrt(),
        residual_mass: 0.0,
    })
}

/// Ensemble average of pure-state maximum-likelihood estimates; estimates
/// that fail to converge are excluded.
pub fn rho_mle_monte_carlo(plan: &SamplingPlan, opts: &MleOptions) -> Result<EnsembleResult> {
    opts.validate()?;
    ensemble_average(plan, |ft| {
        let s = estimate_mle_pure(&plan.pom, ft, opts)?;
        Ok(s.converged.then_some(s.psi))
    })
}

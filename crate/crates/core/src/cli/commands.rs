use std::io::Write;
use std::path::{Path, PathBuf};

use super::config::RunConfig;
use super::files::{
    effects_spec, json_bytes, read_estimate, read_record, record_bytes, record_is_csv,
    write_file, EnsembleFile, EstimateFile, InversionDetails, MonteCarloReport, RecordFile,
    RecordProvenance, ReferenceFidelity, KET_DECIMALS,
};
use super::{Method, Status};
use crate::ensemble::{positivity_violation_study, rho_mle_monte_carlo, Sampler, SamplingPlan, StudyPlan};
use crate::error::{Error, Result};
use crate::estimator::{
    clip_to_density, estimate_double_analytic_on, estimate_inversion, estimate_mle_pure,
    estimate_orthogonal, likelihood_compare, render_table, Candidate, MleOptions, MleSolution,
};
use crate::hilbert::serial::{KetJson, MatrixJson, StateJson};
use crate::hilbert::{fidelity, DensityMatrix, State, StateSpec};
use crate::likelihood::{log_likelihood, FrequencyTable};
use crate::measurement::{Pom, PomSpec};

/// Routes the main output to `--out` or standard output, and the human
/// summary to whichever stream the output does not occupy.
struct Emitter<'a> {
    out: Option<&'a Path>,
}

impl Emitter<'_> {
    fn emit(&self, bytes: &[u8]) -> Result<()> {
        match self.out {
            Some(path) => write_file(path, bytes),
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout.write_all(bytes)?;
                stdout.flush()?;
                Ok(())
            }
        }
    }

    fn say(&self, line: &str) {
        if self.out.is_some() {
            println!("{line}");
        } else {
            eprintln!("{line}");
        }
    }
}

fn build_pom(spec: &PomSpec, dump: Option<&Path>) -> Result<Pom> {
    let pom = spec.build()?;
    if let Some(path) = dump {
        write_file(path, &json_bytes(&effects_spec(&pom))?)?;
        log::info!("wrote {} effects to {}", pom.len(), path.display());
    }
    Ok(pom)
}

pub(super) fn simulate(cfg: &RunConfig, dump: Option<&Path>) -> Result<Status> {
    let spec = cfg.require_pom_spec()?;
    let pom = build_pom(&spec, dump)?;
    let state = cfg.require_state()?;
    let n = cfg.require_n()?;
    let truth = state.build(pom.dim())?.to_density();
    let plan = SamplingPlan::new(truth, pom, n, 1, cfg.seed())?;
    let sampler = Sampler::new(&plan)?;
    let table = sampler.sample_record(0);
    let record = RecordFile {
        pom_spec: spec,
        outcomes: table.rows(),
        provenance: Some(RecordProvenance {
            state: state.clone(),
            seed: cfg.seed(),
            n,
            residual_mass: sampler.residual_mass(),
        }),
    };
    let io = Emitter { out: cfg.out.as_deref() };
    io.emit(&record_bytes(&record, record_is_csv(cfg.out.as_deref()))?)?;
    io.say(&format!(
        "n = {n}, distinct outcomes = {}, residual mass = {:.3e}",
        table.len(),
        sampler.residual_mass()
    ));
    Ok(Status::Success)
}

/// The record and the POM it refers to. An explicit POM overrides the one
/// stored in the record; CSV records need one.
fn load_record_and_pom(
    cfg: &RunConfig,
    fallback: Option<&PomSpec>,
    dump: Option<&Path>,
) -> Result<(PomSpec, Pom, FrequencyTable)> {
    let path = cfg
        .record
        .as_ref()
        .ok_or_else(|| Error::Config("missing \"record\" (or --record)".into()))?;
    let loaded = read_record(path)?;
    let spec = match cfg.pom_spec()? {
        Some(s) => s,
        None => loaded
            .pom_spec
            .or_else(|| fallback.cloned())
            .map(|s| cfg.apply_dim(s))
            .ok_or_else(|| {
                Error::Config(format!(
                    "record {} names no POM; give \"pom\" or --pom",
                    path.display()
                ))
            })?,
    };
    let pom = build_pom(&spec, dump)?;
    loaded.table.check_against(&pom)?;
    Ok((spec, pom, loaded.table))
}

fn finite(v: f64) -> Option<f64> {
    Some(v).filter(|x| x.is_finite())
}

/// Smallest eigenvalue of a pure-state projector.
fn pure_min_eigenvalue(dim: usize) -> f64 {
    if dim > 1 {
        0.0
    } else {
        1.0
    }
}

fn pure_estimate(
    method: Method,
    sol: &MleSolution,
    pom: &Pom,
    ft: &FrequencyTable,
    spec: PomSpec,
    opts: MleOptions,
) -> Result<EstimateFile> {
    // report the likelihood of the state as written, after rounding
    let written = KetJson::from_ket_rounded(&sol.psi, KET_DECIMALS);
    let l = log_likelihood(&written.to_ket()?, pom, ft)?;
    Ok(EstimateFile {
        method,
        state: StateJson::Ket(written),
        log_likelihood_per_datum: finite(l.log_likelihood_per_datum),
        measure_offset: l.measure_offset,
        min_eigenvalue: pure_min_eigenvalue(pom.dim()),
        iterations: sol.iterations,
        residual: sol.residual,
        degenerate: sol.degenerate,
        converged: sol.converged,
        non_physical: false,
        options: opts,
        pom_spec: spec,
        lambda_top: Some(sol.lambda_top),
        inversion: None,
    })
}

pub(super) fn estimate(cfg: &RunConfig, dump: Option<&Path>) -> Result<Status> {
    let method = cfg
        .method
        .ok_or_else(|| Error::Config("missing \"method\" (or --method)".into()))?;
    let opts = cfg.mle_options()?;
    let (spec, pom, ft) = load_record_and_pom(cfg, None, dump)?;
    let file = match method {
        Method::Mle => pure_estimate(method, &estimate_mle_pure(&pom, &ft, &opts)?, &pom, &ft, spec, opts)?,
        Method::DoubleAnalytic => {
            pure_estimate(method, &estimate_double_analytic_on(&pom, &ft)?, &pom, &ft, spec, opts)?
        }
        Method::Inversion => {
            let sol = estimate_inversion(&pom, &ft)?;
            let l = log_likelihood(&sol.clipped()?, &pom, &ft)?;
            EstimateFile {
                method,
                state: StateJson::Matrix(MatrixJson::from_matrix(sol.rho_raw.matrix())),
                log_likelihood_per_datum: finite(l.log_likelihood_per_datum),
                measure_offset: l.measure_offset,
                min_eigenvalue: sol.min_eigenvalue,
                iterations: 0,
                residual: sol.max_abs_residual,
                degenerate: false,
                converged: true,
                non_physical: sol.non_physical(),
                options: opts,
                pom_spec: spec,
                lambda_top: None,
                inversion: Some(InversionDetails {
                    rank: sol.rank,
                    parameters: sol.parameters,
                    constraint_residual: sol.constraint_residual,
                    likelihood_of_clipped_state: true,
                }),
            }
        }
        Method::Orthogonal => {
            let rho = estimate_orthogonal(&pom, &ft)?;
            let l = log_likelihood(&rho, &pom, &ft)?;
            EstimateFile {
                method,
                state: StateJson::Matrix(MatrixJson::from_matrix(rho.matrix())),
                log_likelihood_per_datum: finite(l.log_likelihood_per_datum),
                measure_offset: l.measure_offset,
                min_eigenvalue: rho.min_eigenvalue(),
                iterations: 0,
                residual: 0.0,
                degenerate: false,
                converged: true,
                non_physical: false,
                options: opts,
                pom_spec: spec,
                lambda_top: None,
                inversion: None,
            }
        }
    };
    let io = Emitter { out: cfg.out.as_deref() };
    io.emit(&json_bytes(&file)?)?;
    let l = file
        .log_likelihood_per_datum
        .map_or("-inf".to_string(), |v| format!("{v:.12}"));
    io.say(&format!(
        "method = {:?}, log-likelihood per datum = {l}, min eigenvalue = {:.6e}{}",
        method,
        file.min_eigenvalue,
        if file.non_physical { " (non-physical)" } else { "" }
    ));
    if !file.converged {
        io.say(&format!(
            "estimate not certified: extremal-equation residual {:.3e} above tol {:.1e}",
            file.residual, opts.tol
        ));
        return Ok(Status::NotConverged);
    }
    Ok(Status::Success)
}

pub(super) fn ensemble(cfg: &RunConfig, dump: Option<&Path>, csv: Option<&Path>) -> Result<Status> {
    let spec = cfg.require_pom_spec()?;
    let state = cfg.require_state()?;
    let opts = cfg.mle_options()?;
    if cfg.n.is_none() && cfg.datasets.is_none() && cfg.study.is_none() {
        return Err(Error::Config(
            "nothing to run: give \"n\" and \"datasets\" and/or \"study\"".into(),
        ));
    }
    let io = Emitter { out: cfg.out.as_deref() };
    let monte_carlo = if cfg.n.is_some() || cfg.datasets.is_some() {
        let n = cfg.require_n()?;
        let datasets = cfg
            .datasets
            .ok_or_else(|| Error::Config("missing \"datasets\" (or --datasets)".into()))?;
        let pom = build_pom(&spec, dump)?;
        let truth = state.build(pom.dim())?.to_density();
        let plan = SamplingPlan::new(truth.clone(), pom, n, datasets, cfg.seed())?;
        let res = rho_mle_monte_carlo(&plan, &opts)?;
        let expected = match state {
            StateSpec::Coherent { alpha } if n == 1 => {
                let reference = StateSpec::DisplacedThermal {
                    alpha: *alpha,
                    mean_n: 1.0,
                };
                let rho = reference.build(plan.pom.dim())?.to_density();
                Some(ReferenceFidelity {
                    fidelity: fidelity(&res.rho_mle, &rho)?,
                    reference,
                })
            }
            _ => None,
        };
        let se = &res.standard_error_per_entry;
        let report = MonteCarloReport {
            n_per_dataset: n,
            datasets,
            datasets_used: res.datasets_used,
            datasets_excluded: res.datasets_excluded,
            residual_mass: res.residual_mass,
            rho_mle: MatrixJson::from_matrix(res.rho_mle.matrix()),
            standard_error_per_entry: (0..se.nrows())
                .map(|r| (0..se.ncols()).map(|c| se[(r, c)]).collect())
                .collect(),
            mean_photon_number: res.mean_photon_number,
            mean_photon_number_se: res.mean_photon_number_se,
            fidelity_to_truth: fidelity(&res.rho_mle, &truth)?,
            expected,
        };
        Some(report)
    } else {
        None
    };
    let study = match &cfg.study {
        Some(s) => Some(positivity_violation_study(&StudyPlan {
            state: state.clone(),
            pom: spec.clone(),
            dims: s.dims.clone(),
            ns: s.ns.clone(),
            trials: s.trials,
            seed: cfg.seed(),
            mle: opts,
        })?),
        None => None,
    };
    let file = EnsembleFile {
        seed: cfg.seed(),
        options: opts,
        state: state.clone(),
        pom_spec: spec,
        monte_carlo,
        study,
    };
    io.emit(&json_bytes(&file)?)?;
    if let Some(mc) = &file.monte_carlo {
        io.say(&format!(
            "{} of {} datasets used; mean photon number {:.6} +/- {:.6}; fidelity to true state {:.6}",
            mc.datasets_used, mc.datasets, mc.mean_photon_number, mc.mean_photon_number_se, mc.fidelity_to_truth
        ));
        if let Some(e) = &mc.expected {
            io.say(&format!("fidelity to displaced thermal state (mean_n 1) {:.6}", e.fidelity));
        }
    }
    if let Some(report) = &file.study {
        let csv_path: Option<PathBuf> = csv
            .map(Path::to_path_buf)
            .or_else(|| cfg.out.as_ref().map(|p| p.with_extension("csv")));
        match csv_path {
            Some(path) => {
                let mut buf = Vec::new();
                report.write_csv(&mut buf)?;
                write_file(&path, &buf)?;
                io.say(&format!("study table written to {}", path.display()));
            }
            None => log::warn!("study table not written: give --csv or --out"),
        }
        for r in &report.rows {
            io.say(&format!(
                "dim {} n {}: inversion violation fraction {:.4}, min estimate eigenvalue {:.3e}",
                r.dim, r.n, r.inversion_violation_fraction, r.mle_min_eig_min
            ));
        }
    }
    Ok(Status::Success)
}

fn candidate(path: &Path, file: &EstimateFile) -> Result<Candidate> {
    let label = path.display().to_string();
    Ok(match &file.state {
        StateJson::Ket(_) => Candidate {
            label,
            state: State::from_json(&file.state)?,
            clipped: false,
        },
        StateJson::Matrix(m) => match DensityMatrix::new(m.to_matrix()?) {
            Ok(rho) => Candidate {
                label,
                state: State::Mixed(rho),
                clipped: false,
            },
            Err(_) => Candidate {
                label,
                state: State::Mixed(clip_to_density(&m.to_hermitian()?)?),
                clipped: true,
            },
        },
    })
}

#[derive(serde::Serialize)]
struct CompareFile<'a> {
    record: &'a Path,
    rows: Vec<crate::estimator::ComparisonRow>,
}

pub(super) fn compare(cfg: &RunConfig, dump: Option<&Path>, paths: &[PathBuf]) -> Result<Status> {
    let estimates = paths
        .iter()
        .map(|p| read_estimate(p))
        .collect::<Result<Vec<_>>>()?;
    let (_, pom, ft) = load_record_and_pom(cfg, estimates.first().map(|e| &e.pom_spec), dump)?;
    let candidates = paths
        .iter()
        .zip(&estimates)
        .map(|(p, e)| {
            if e.state.dim() != pom.dim() {
                return Err(Error::DimensionMismatch {
                    expected: pom.dim(),
                    found: e.state.dim(),
                });
            }
            candidate(p, e)
        })
        .collect::<Result<Vec<_>>>()?;
    let truth = cfg.state.as_ref().map(|s| s.build(pom.dim())).transpose()?;
    let rows = likelihood_compare(&candidates, &pom, &ft, truth.as_ref().map(State::as_ref))?;
    let io = Emitter { out: cfg.out.as_deref() };
    io.emit(&json_bytes(&CompareFile {
        record: cfg.record.as_deref().unwrap_or(Path::new("")),
        rows: rows.clone(),
    })?)?;
    for line in render_table(&rows).lines() {
        io.say(line);
    }
    Ok(Status::Success)
}

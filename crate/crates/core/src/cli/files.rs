//! On-disk formats: measurement records, estimates, ensemble reports and
//! effect dumps.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Method;
use crate::ensemble::StudyReport;
use crate::error::{Error, Result};
use crate::estimator::MleOptions;
use crate::hilbert::serial::{MatrixJson, StateJson};
use crate::hilbert::StateSpec;
use crate::likelihood::{FrequencyTable, OutcomeCount};
use crate::measurement::{CustomEffectSpec, EffectOperator, Pom, PomSpec};

/// Decimal places kept for pure-state amplitudes, so that estimators that
/// agree to rounding error write identical files.
pub const KET_DECIMALS: i32 = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecordFile {
    pub pom_spec: PomSpec,
    pub outcomes: Vec<OutcomeCount>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<RecordProvenance>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecordProvenance {
    pub state: StateSpec,
    pub seed: u64,
    pub n: u64,
    pub residual_mass: f64,
}

/// A record read from disk. CSV records carry no POM.
pub struct LoadedRecord {
    pub pom_spec: Option<PomSpec>,
    pub table: FrequencyTable,
}

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

pub fn read_record(path: &Path) -> Result<LoadedRecord> {
    let context = |e: &dyn std::fmt::Display| Error::Config(format!("record {}: {e}", path.display()));
    if is_csv(path) {
        let mut reader = csv::Reader::from_path(path).map_err(|e| context(&e))?;
        let rows = reader
            .deserialize::<OutcomeCount>()
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| context(&e))?;
        return Ok(LoadedRecord {
            pom_spec: None,
            table: FrequencyTable::from_counts(rows)?,
        });
    }
    let text = std::fs::read_to_string(path).map_err(|e| context(&e))?;
    let file: RecordFile = serde_json::from_str(&text).map_err(|e| context(&e))?;
    Ok(LoadedRecord {
        pom_spec: Some(file.pom_spec),
        table: FrequencyTable::from_counts(file.outcomes)?,
    })
}

/// Writes JSON, or `id,count` CSV when the path ends in `.csv`.
pub fn record_bytes(record: &RecordFile, csv_format: bool) -> Result<Vec<u8>> {
    if csv_format {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &record.outcomes {
            w.serialize(row)?;
        }
        return w.into_inner().map_err(|e| Error::Io(e.into_error()));
    }
    json_bytes(record)
}

pub fn record_is_csv(path: Option<&Path>) -> bool {
    path.is_some_and(is_csv)
}

/// Extra fields of an inversion estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InversionDetails {
    pub rank: usize,
    pub parameters: usize,
    pub constraint_residual: f64,
    /// The likelihood of a non-physical matrix is evaluated on its clipped state.
    pub likelihood_of_clipped_state: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateFile {
    pub method: Method,
    pub state: StateJson,
    /// `null` when an observed outcome has probability zero.
    pub log_likelihood_per_datum: Option<f64>,
    pub measure_offset: f64,
    pub min_eigenvalue: f64,
    pub iterations: usize,
    pub residual: f64,
    pub degenerate: bool,
    pub converged: bool,
    pub non_physical: bool,
    pub options: MleOptions,
    pub pom_spec: PomSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_top: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inversion: Option<InversionDetails>,
}

pub fn read_estimate(path: &Path) -> Result<EstimateFile> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("estimate {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("estimate {}: {e}", path.display())))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceFidelity {
    pub reference: StateSpec,
    pub fidelity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub n_per_dataset: u64,
    pub datasets: usize,
    pub datasets_used: usize,
    pub datasets_excluded: usize,
    pub residual_mass: f64,
    pub rho_mle: MatrixJson,
    pub standard_error_per_entry: Vec<Vec<f64>>,
    pub mean_photon_number: f64,
    pub mean_photon_number_se: f64,
    pub fidelity_to_truth: f64,
    /// The single-detection prediction for coherent inputs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected: Option<ReferenceFidelity>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleFile {
    pub seed: u64,
    pub options: MleOptions,
    pub state: StateSpec,
    pub pom_spec: PomSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub monte_carlo: Option<MonteCarloReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub study: Option<StudyReport>,
}

/// Every effect written out as a custom POM spec that rebuilds the same POM.
pub fn effects_spec(pom: &Pom) -> PomSpec {
    let effects = pom
        .effects()
        .iter()
        .map(|e| {
            let (ket, scale, matrix) = match &e.operator {
                EffectOperator::Rank1 { ket, scale } => (
                    Some(ket.amplitudes().iter().map(|z| [z.re, z.im]).collect()),
                    *scale,
                    None,
                ),
                EffectOperator::General(h) => (None, 1.0, Some(MatrixJson::from_matrix(h.matrix()))),
            };
            CustomEffectSpec {
                id: e.id.0,
                weight: e.weight,
                ket,
                scale,
                matrix,
            }
        })
        .collect();
    PomSpec::Custom {
        dim: pom.dim(),
        effects,
    }
}

pub fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes)
        .map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))
}

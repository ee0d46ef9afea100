use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::hilbert::{check_dims, fidelity, State, StateRef};
use crate::likelihood::{log_likelihood, FrequencyTable};
use crate::measurement::Pom;

/// A state entered into a comparison.
#[derive(Debug, Clone)]
pub struct Candidate {
    pub label: String,
    pub state: State,
    /// True when the state was obtained by clipping a non-physical estimate.
    pub clipped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub label: String,
    /// `None` when an observed outcome has probability zero.
    pub log_likelihood_per_datum: Option<f64>,
    pub measure_offset: f64,
    pub fidelity_to_truth: Option<f64>,
    pub min_eigenvalue: f64,
    pub clipped: bool,
}

pub fn likelihood_compare(
    candidates: &[Candidate],
    pom: &Pom,
    ft: &FrequencyTable,
    truth: Option<StateRef<'_>>,
) -> Result<Vec<ComparisonRow>> {
    candidates
        .iter()
        .map(|c| {
            check_dims(pom.dim(), c.state.dim())?;
            let l = log_likelihood(&c.state, pom, ft)?;
            let fid = truth.map(|t| fidelity(&c.state, t)).transpose()?;
            Ok(ComparisonRow {
                label: c.label.clone(),
                log_likelihood_per_datum: Some(l.log_likelihood_per_datum)
                    .filter(|v| v.is_finite()),
                measure_offset: l.measure_offset,
                fidelity_to_truth: fid,
                min_eigenvalue: c.state.as_ref().min_eigenvalue(),
                clipped: c.clipped,
            })
        })
        .collect()
}

/// Plain-text rendering, one row per candidate.
pub fn render_table(rows: &[ComparisonRow]) -> String {
    let mut out = format!(
        "{:<24} {:>20} {:>12} {:>14} {:>8}\n",
        "label", "log_likelihood", "fidelity", "min_eig", "clipped"
    );
    for r in rows {
        let l = r
            .log_likelihood_per_datum
            .map_or("-inf".to_string(), |v| format!("{v:.12}"));
        let f = r.fidelity_to_truth.map_or("-".to_string(), |v| format!("{v:.8}"));
        out.push_str(&format!(
            "{:<24} {:>20} {:>12} {:>14.6e} {:>8}\n",
            r.label, l, f, r.min_eigenvalue, r.clipped
        ));
    }
    out
}

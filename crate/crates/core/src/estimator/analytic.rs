use crate::error::{Error, Result};
use crate::hilbert::{Ket, C64};
use crate::likelihood::{log_likelihood, AuxWeights, FrequencyTable, LikelihoodValue};
use crate::measurement::Pom;

use super::mle::{rank1_kets, MleSolution};

/// Overlap modulus above which two detected states count as coincident.
const COINCIDENT_TOL: f64 = 1e-12;

/// Closed-form estimate for two distinct detections with one count each:
/// the balanced superposition `(e^{i arg C} |y1> + |y2>) / sqrt(2 (1 + |C|))`
/// with `C = <y1|y2>`, at `a = (1, 1)`.
///
/// Coincident states return `y1` with the `degenerate` flag set.
pub fn estimate_double_analytic(y1: &Ket, y2: &Ket) -> Result<MleSolution> {
    let c = y1.inner(y2)?;
    let modulus = c.norm();
    let coincident = modulus >= 1.0 - COINCIDENT_TOL;
    let psi = if coincident {
        y1.clone()
    } else {
        let phase = if modulus > 0.0 {
            c / modulus
        } else {
            C64::new(1.0, 0.0)
        };
        let v = y1.amplitudes() * phase + y2.amplitudes();
        Ket::normalize(v.unscale((2.0 * (1.0 + modulus)).sqrt()))?.0
    };
    let psi = psi.canonical_phase(Some(y1));
    let lambda_top = (1.0 + modulus.min(1.0)) / 2.0;
    // both overlaps equal (1 + |C|) / 2, which is also the top eigenvalue
    let value = lambda_top.ln();
    Ok(MleSolution {
        psi,
        a: AuxWeights::new(vec![1.0, 1.0])?,
        lambda_top,
        log_likelihood: LikelihoodValue {
            log_likelihood_per_datum: value,
            measure_offset: 0.0,
            n: Some(2),
        },
        iterations: 0,
        residual: 0.0,
        degenerate: coincident || modulus == 0.0,
        converged: true,
        trace: vec![value],
        subspace_rank: if coincident { 1 } else { 2 },
    })
}

/// The closed form applied to a record: either a single distinct outcome or
/// two distinct outcomes with equal counts.
pub fn estimate_double_analytic_on(pom: &Pom, ft: &FrequencyTable) -> Result<MleSolution> {
    ft.check_against(pom)?;
    let kets = rank1_kets(pom, ft)?;
    let mut sol = match kets.as_slice() {
        [y] => estimate_double_analytic(y, y)?,
        [y1, y2] if (ft.frequencies()[0] - ft.frequencies()[1]).abs() < 1e-15 => {
            estimate_double_analytic(y1, y2)?
        }
        _ => {
            return Err(Error::InvalidArgument(format!(
                "closed form needs one outcome or two equally frequent outcomes, got {} distinct",
                ft.len()
            )))
        }
    };
    sol.log_likelihood = log_likelihood(&sol.psi, pom, ft)?;
    sol.trace = vec![sol.log_likelihood.log_likelihood_per_datum];
    if kets.len() == 1 {
        sol.a = AuxWeights::new(vec![1.0])?;
        sol.lambda_top = 1.0;
    }
    Ok(sol)
}

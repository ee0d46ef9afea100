use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::hilbert::{DensityMatrix, C64};
use crate::likelihood::FrequencyTable;
use crate::measurement::{Pom, PomKind};

const PROJECTOR_TOL: f64 = 1e-10;

/// Effects `w_i Pi_i` as dense matrices, after checking that they are
/// mutually orthogonal projectors.
fn orthogonal_projectors(pom: &Pom) -> Result<Vec<DMatrix<C64>>> {
    let mats: Vec<DMatrix<C64>> = pom
        .effects()
        .iter()
        .map(|e| e.operator.matrix().scale(e.weight))
        .collect();
    if pom.kind() == PomKind::FockProjective {
        return Ok(mats);
    }
    for (i, p) in mats.iter().enumerate() {
        if (p * p - p).norm() > PROJECTOR_TOL {
            return Err(Error::NonOrthogonalPom);
        }
        for q in &mats[i + 1..] {
            if (p * q).norm() > PROJECTOR_TOL {
                return Err(Error::NonOrthogonalPom);
            }
        }
    }
    Ok(mats)
}

/// Closed-form maximum-likelihood state for an orthogonal measurement:
/// `rho = sum_i f_i P_i / rank(P_i)`.
pub fn estimate_orthogonal(pom: &Pom, ft: &FrequencyTable) -> Result<DensityMatrix> {
    ft.check_against(pom)?;
    let mats = orthogonal_projectors(pom)?;
    let dim = pom.dim();
    let mut rho = DMatrix::<C64>::zeros(dim, dim);
    for (id, f) in ft.outcomes().iter().zip(ft.frequencies()) {
        let p = &mats[pom.position(*id)?];
        let rank = p.trace().re.round();
        if rank < 1.0 {
            return Err(Error::InvalidArgument(format!(
                "outcome {id} was observed but its projector is zero"
            )));
        }
        rho += p.scale(f / rank);
    }
    DensityMatrix::new(rho)
}

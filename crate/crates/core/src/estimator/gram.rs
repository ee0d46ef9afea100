//! The extremal eigenproblem expressed in the non-orthogonal basis of the
//! detected kets.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::hilbert::{eigh, Ket, DEGENERACY_GAP, C64};
use crate::likelihood::AuxWeights;

/// Smallest Gram eigenvalue (relative) treated as non-singular.
pub const GRAM_SINGULAR_TOL: f64 = 1e-12;

/// `C_ki = <y_k|y_i>` together with the weights that define `D = diag(f/a)`.
#[derive(Debug, Clone)]
pub struct GramProblem {
    kets: Vec<Ket>,
    gram: DMatrix<C64>,
    f: Vec<f64>,
    a: AuxWeights,
}

impl GramProblem {
    pub fn new(kets: Vec<Ket>, f: Vec<f64>, a: AuxWeights) -> Result<Self> {
        if kets.is_empty() {
            return Err(Error::Empty("gram problem needs at least one ket".into()));
        }
        if f.len() != kets.len() || a.len() != kets.len() {
            return Err(Error::InvalidArgument(format!(
                "{} kets, {} frequencies, {} weights",
                kets.len(),
                f.len(),
                a.len()
            )));
        }
        let n = kets.len();
        let mut gram = DMatrix::from_element(n, n, C64::new(0.0, 0.0));
        for k in 0..n {
            gram[(k, k)] = C64::new(1.0, 0.0);
            for i in k + 1..n {
                let c = kets[k].inner(&kets[i])?;
                gram[(k, i)] = c;
                gram[(i, k)] = c.conj();
            }
        }
        Ok(Self { kets, gram, f, a })
    }

    pub fn gram(&self) -> &DMatrix<C64> {
        &self.gram
    }

    pub fn kets(&self) -> &[Ket] {
        &self.kets
    }

    fn d(&self) -> Vec<f64> {
        self.f
            .iter()
            .zip(self.a.values())
            .map(|(f, a)| f / a)
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct GramSolution {
    pub lambda_top: f64,
    /// Coefficients `V_i` of `psi = sum_i V_i |y_i>`, scaled so that `psi` is normalized.
    pub coefficients: DVector<C64>,
    pub psi: Ket,
    pub degenerate: bool,
    /// Smallest Gram eigenvalue; below `GRAM_SINGULAR_TOL` the kets are
    /// numerically dependent and `V` is one of many equivalent expansions.
    pub gram_min_eigenvalue: f64,
    pub singular: bool,
}

/// Top eigenpair of `D C` through the Hermitian form `D^{1/2} C D^{1/2}`.
pub fn gram_eigenproblem(gp: &GramProblem) -> Result<GramSolution> {
    let d = gp.d();
    let sq: Vec<f64> = d.iter().map(|v| v.sqrt()).collect();
    let n = d.len();
    let h = DMatrix::from_fn(n, n, |k, i| gp.gram[(k, i)] * (sq[k] * sq[i]));
    let (values, vectors) = eigh(&h);
    let lambda_top = values[n - 1];
    let degenerate = n > 1 && values[n - 1] - values[n - 2] < DEGENERACY_GAP * lambda_top.abs();
    let (c_values, _) = eigh(&gp.gram);
    let gram_min_eigenvalue = c_values[0];
    let singular = gram_min_eigenvalue < GRAM_SINGULAR_TOL * c_values[n - 1];
    if lambda_top <= 0.0 {
        return Err(Error::InvalidState("gram eigenproblem has no positive eigenvalue".into()));
    }

    // V = D^{1/2} u, with |psi|^2 = V^dagger C V = lambda
    let v = DVector::from_fn(n, |i, _| vectors[(i, n - 1)] * sq[i]);
    let dim = gp.kets[0].dim();
    let mut psi = DVector::<C64>::zeros(dim);
    for (vi, y) in v.iter().zip(&gp.kets) {
        psi += y.amplitudes() * *vi;
    }
    let (psi, norm) = Ket::normalize(psi)?;
    Ok(GramSolution {
        lambda_top,
        coefficients: v.unscale(norm),
        psi,
        degenerate,
        gram_min_eigenvalue,
        singular,
    })
}

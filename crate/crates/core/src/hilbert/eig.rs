use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::ket::{check_dims, Ket};
use super::operator::{hermiticity_defect, DensityMatrix, HermitianOperator};
use super::C64;
use crate::error::{Error, Result};

/// Relative spectral gap below which the top eigenvalue counts as degenerate.
pub const DEGENERACY_GAP: f64 = 1e-8;

/// Dense Hermitian eigensolver: eigenvalues ascending, eigenvectors as columns.
///
/// Only the lower triangle is trusted; callers pass matrices that are Hermitian
/// up to rounding.
pub fn eigh(m: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let n = m.nrows();
    if n == 1 {
        return (vec![m[(0, 0)].re], DMatrix::identity(1, 1));
    }
    let se = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
    let values = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| se.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Spectral decomposition of a Hermitian operator.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<Ket>,
    /// True when the gap below the top eigenvalue is under `gap_threshold`.
    pub degenerate: bool,
    /// Absolute gap threshold that was applied (relative threshold times spectral norm).
    pub gap_threshold: f64,
}

impl EigenDecomposition {
    pub fn top(&self) -> (f64, &Ket) {
        let last = self.eigenvalues.len() - 1;
        (self.eigenvalues[last], &self.eigenvectors[last])
    }

    pub fn spectral_norm(&self) -> f64 {
        self.eigenvalues
            .iter()
            .fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    /// Rebuilds `sum_i lambda_i |v_i><v_i|`.
    pub fn reconstruct(&self) -> DMatrix<C64> {
        let n = self.eigenvectors[0].dim();
        let mut acc = DMatrix::zeros(n, n);
        for (l, v) in self.eigenvalues.iter().zip(&self.eigenvectors) {
            acc += v.projector().scale(*l);
        }
        acc
    }

    /// Indices (ascending) of eigenvalues within the degeneracy gap of the top one.
    pub fn top_multiplet(&self) -> Vec<usize> {
        let top = *self.eigenvalues.last().expect("non-empty spectrum");
        (0..self.eigenvalues.len())
            .filter(|&i| top - self.eigenvalues[i] < self.gap_threshold)
            .collect()
    }
}

pub(crate) fn decomposition_from(values: Vec<f64>, vectors: &DMatrix<C64>) -> EigenDecomposition {
    let n = values.len();
    let norm = values.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let gap_threshold = DEGENERACY_GAP * norm;
    let degenerate = n > 1 && (values[n - 1] - values[n - 2]) < gap_threshold;
    let eigenvectors = (0..n)
        .map(|c| {
            let col: DVector<C64> = vectors.column(c).into_owned();
            Ket::normalize(col)
                .map(|(k, _)| k)
                .expect("eigenvectors are non-zero")
        })
        .collect();
    EigenDecomposition {
        eigenvalues: values,
        eigenvectors,
        degenerate,
        gap_threshold,
    }
}

pub fn eig_hermitian(h: &HermitianOperator) -> EigenDecomposition {
    let (values, vectors) = eigh(h.matrix());
    decomposition_from(values, &vectors)
}

/// Validating variant for raw matrices.
pub fn eig_hermitian_matrix(m: &DMatrix<C64>) -> Result<EigenDecomposition> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    let (deviation, tolerance) = hermiticity_defect(m);
    if deviation > tolerance {
        return Err(Error::NotHermitian {
            deviation,
            tolerance,
        });
    }
    Ok(eig_hermitian(&HermitianOperator::new(m.clone())?))
}

/// Result of bounding `Tr(rho B)` by the top eigenvalue of `B`.
#[derive(Debug, Clone)]
pub struct MaxEigenBound {
    pub bound: f64,
    pub attaining_state: Ket,
    /// `Tr(rho B)` for the supplied state.
    pub expectation: f64,
}

/// `Tr(rho B) <= max_i lambda_i`, attained by the top spectral projector of `B`.
pub fn max_eigen_bound(rho: &DensityMatrix, b: &HermitianOperator) -> Result<MaxEigenBound> {
    check_dims(b.dim(), rho.dim())?;
    let eig = eig_hermitian(b);
    let (bound, v) = eig.top();
    Ok(MaxEigenBound {
        bound,
        attaining_state: v.clone(),
        expectation: rho.trace_with(b.matrix())?,
    })
}

/// Principal square root of a PSD matrix; negative rounding eigenvalues are clipped.
pub fn psd_sqrt(m: &DMatrix<C64>) -> DMatrix<C64> {
    let (values, vectors) = eigh(m);
    let n = values.len();
    let d = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            C64::new(values[i].max(0.0).sqrt(), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    &vectors * d * vectors.adjoint()
}

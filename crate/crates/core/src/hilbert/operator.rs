use nalgebra::DMatrix;

use super::eig::eigh;
use super::ket::{check_dims, Ket};
use super::C64;
use crate::error::{Error, Result};

/// Relative Hermiticity tolerance: max |H - H^dagger| <= HERMITIAN_TOL * (1 + max |H|).
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Trace and positivity tolerance for density matrices.
pub const STATE_TOL: f64 = 1e-10;

fn check_square(m: &DMatrix<C64>) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    if m.nrows() == 0 {
        return Err(Error::DimensionTooSmall { min: 1, found: 0 });
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite("matrix entries".into()));
    }
    Ok(())
}

/// Largest entrywise deviation from Hermiticity together with the allowed tolerance.
pub fn hermiticity_defect(m: &DMatrix<C64>) -> (f64, f64) {
    let n = m.nrows();
    let mut dev: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
            scale = scale.max(m[(i, j)].norm());
        }
    }
    (dev, HERMITIAN_TOL * (1.0 + scale))
}

fn symmetrize(m: &DMatrix<C64>) -> DMatrix<C64> {
    (m + m.adjoint()).unscale(2.0)
}

/// A Hermitian operator on the truncated Fock space.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    matrix: DMatrix<C64>,
}

impl HermitianOperator {
    pub fn new(matrix: DMatrix<C64>) -> Result<Self> {
        check_square(&matrix)?;
        let (deviation, tolerance) = hermiticity_defect(&matrix);
        if deviation > tolerance {
            return Err(Error::NotHermitian {
                deviation,
                tolerance,
            });
        }
        Ok(Self {
            matrix: symmetrize(&matrix),
        })
    }

    /// Builds from a matrix Hermitian up to rounding, without the tolerance check.
    pub(crate) fn from_matrix_unchecked(matrix: DMatrix<C64>) -> Self {
        Self {
            matrix: symmetrize(&matrix),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: DMatrix::identity(dim, dim),
        }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self {
            matrix: DMatrix::from_fn(n, n, |i, j| {
                if i == j {
                    C64::new(diag[i], 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            }),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn min_eigenvalue(&self) -> f64 {
        eigh(&self.matrix).0[0]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        *eigh(&self.matrix).0.last().expect("dim >= 1")
    }
}

/// A Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: DMatrix<C64>,
}

impl DensityMatrix {
    pub fn new(matrix: DMatrix<C64>) -> Result<Self> {
        let h = HermitianOperator::new(matrix)?;
        let trace = h.trace();
        if (trace - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidState(format!("trace {trace} differs from 1")));
        }
        let min = h.min_eigenvalue();
        if min < -STATE_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(Self { matrix: h.matrix })
    }

    /// Rescales a PSD matrix to unit trace; used for truncated constructions.
    pub(crate) fn from_psd_unnormalized(matrix: DMatrix<C64>) -> Result<Self> {
        let trace = matrix.trace().re;
        if trace <= 0.0 || !trace.is_finite() {
            return Err(Error::InvalidState(format!("trace {trace} cannot be normalized")));
        }
        Self::new(symmetrize(&matrix).unscale(trace))
    }

    pub fn from_pure(ket: &Ket) -> Self {
        Self {
            matrix: ket.projector(),
        }
    }

    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::DimensionTooSmall { min: 1, found: 0 });
        }
        Ok(Self {
            matrix: DMatrix::identity(dim, dim).unscale(dim as f64),
        })
    }

    pub fn from_diagonal(probabilities: &[f64]) -> Result<Self> {
        Self::new(HermitianOperator::from_real_diagonal(probabilities).into_matrix())
    }

    /// Convex combination `sum_i w_i rho_i`.
    pub fn mixture(parts: &[(f64, &DensityMatrix)]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::Empty("mixture components".into()))?;
        let dim = first.1.dim();
        let mut acc = DMatrix::zeros(dim, dim);
        for (w, rho) in parts {
            check_dims(dim, rho.dim())?;
            if *w < 0.0 {
                return Err(Error::InvalidArgument("negative mixture weight".into()));
            }
            acc += rho.matrix.scale(*w);
        }
        Self::new(acc)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn min_eigenvalue(&self) -> f64 {
        eigh(&self.matrix).0[0]
    }

    /// `Tr(rho * op)`; real part only, `op` is expected Hermitian.
    pub fn trace_with(&self, op: &DMatrix<C64>) -> Result<f64> {
        check_dims(self.dim(), op.nrows())?;
        Ok((&self.matrix * op).trace().re)
    }
}

/// Borrowed view of either a pure or a mixed state.
#[derive(Debug, Clone, Copy)]
pub enum StateRef<'a> {
    Pure(&'a Ket),
    Mixed(&'a DensityMatrix),
}

impl<'a> From<&'a Ket> for StateRef<'a> {
    fn from(k: &'a Ket) -> Self {
        StateRef::Pure(k)
    }
}

impl<'a> From<&'a DensityMatrix> for StateRef<'a> {
    fn from(r: &'a DensityMatrix) -> Self {
        StateRef::Mixed(r)
    }
}

impl StateRef<'_> {
    pub fn dim(&self) -> usize {
        match self {
            StateRef::Pure(k) => k.dim(),
            StateRef::Mixed(r) => r.dim(),
        }
    }

    /// `<y|rho|y>` for a normalized ket `y`.
    pub fn ket_expectation(&self, y: &Ket) -> Result<f64> {
        check_dims(self.dim(), y.dim())?;
        Ok(match self {
            StateRef::Pure(k) => k.amplitudes().dotc(y.amplitudes()).norm_sqr(),
            StateRef::Mixed(r) => y
                .amplitudes()
                .dotc(&(r.matrix() * y.amplitudes()))
                .re,
        })
    }

    /// `Tr(rho * op)`.
    pub fn trace_with(&self, op: &DMatrix<C64>) -> Result<f64> {
        match self {
            StateRef::Pure(k) => k.expectation(op).map(|z| z.re),
            StateRef::Mixed(r) => r.trace_with(op),
        }
    }

    pub fn to_density(&self) -> DensityMatrix {
        match self {
            StateRef::Pure(k) => DensityMatrix::from_pure(k),
            StateRef::Mixed(r) => (*r).clone(),
        }
    }

    pub fn min_eigenvalue(&self) -> f64 {
        match self {
            StateRef::Pure(k) if k.dim() == 1 => 1.0,
            StateRef::Pure(_) => 0.0,
            StateRef::Mixed(r) => r.min_eigenvalue(),
        }
    }
}

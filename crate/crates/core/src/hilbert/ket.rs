use nalgebra::DVector;

use super::C64;
use crate::error::{Error, Result};

/// A normalized state vector in a truncated Fock basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Ket {
    amplitudes: DVector<C64>,
}

impl Ket {
    /// Normalizes `amplitudes` and returns the ket together with the norm it had.
    pub fn normalize(amplitudes: DVector<C64>) -> Result<(Self, f64)> {
        if amplitudes.is_empty() {
            return Err(Error::DimensionTooSmall { min: 1, found: 0 });
        }
        if amplitudes.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("ket amplitudes".into()));
        }
        let norm = amplitudes.norm();
        if norm == 0.0 {
            return Err(Error::InvalidArgument("zero vector cannot be normalized".into()));
        }
        Ok((
            Self {
                amplitudes: amplitudes.unscale(norm),
            },
            norm,
        ))
    }

    pub fn from_amplitudes(amplitudes: Vec<C64>) -> Result<Self> {
        Self::normalize(DVector::from_vec(amplitudes)).map(|(ket, _)| ket)
    }

    /// Fock basis state `|k>`.
    pub fn basis(k: usize, dim: usize) -> Result<Self> {
        if k >= dim {
            return Err(Error::InvalidArgument(format!(
                "basis index {k} out of range for dim {dim}"
            )));
        }
        let mut v = DVector::zeros(dim);
        v[k] = C64::new(1.0, 0.0);
        Ok(Self { amplitudes: v })
    }

    pub fn vacuum(dim: usize) -> Result<Self> {
        Self::basis(0, dim)
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> DVector<C64> {
        self.amplitudes
    }

    pub fn norm_squared(&self) -> f64 {
        self.amplitudes.norm_squared()
    }

    /// `<self|other>`, conjugate-linear in `self`.
    pub fn inner(&self, other: &Ket) -> Result<C64> {
        check_dims(self.dim(), other.dim())?;
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    /// Returns the ket multiplied by a unit-modulus phase.
    pub fn with_phase(&self, phase: C64) -> Self {
        Self {
            amplitudes: self.amplitudes.map(|z| z * phase),
        }
    }

    /// Removes the global phase so that `<reference|self>` is real and non-negative.
    /// Falls back to the largest amplitude when the overlap vanishes.
    pub fn canonical_phase(&self, reference: Option<&Ket>) -> Self {
        let overlap = reference
            .filter(|r| r.dim() == self.dim())
            .map(|r| r.amplitudes.dotc(&self.amplitudes))
            .filter(|z| z.norm() > 1e-12);
        let anchor = overlap.unwrap_or_else(|| {
            let mut best = C64::new(0.0, 0.0);
            for z in self.amplitudes.iter() {
                if z.norm() > best.norm() + 1e-12 {
                    best = *z;
                }
            }
            best
        });
        if anchor.norm() == 0.0 {
            return self.clone();
        }
        self.with_phase(anchor.conj() / anchor.norm())
    }

    /// Expectation value `<self|op|self>` of a square matrix.
    pub fn expectation(&self, op: &nalgebra::DMatrix<C64>) -> Result<C64> {
        check_dims(self.dim(), op.nrows())?;
        Ok(self.amplitudes.dotc(&(op * &self.amplitudes)))
    }

    /// The projector `|self><self|`.
    pub fn projector(&self) -> nalgebra::DMatrix<C64> {
        &self.amplitudes * self.amplitudes.adjoint()
    }
}

/// `<a|b>` between two kets of equal dimension.
pub fn inner(a: &Ket, b: &Ket) -> Result<C64> {
    a.inner(b)
}

pub(crate) fn check_dims(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

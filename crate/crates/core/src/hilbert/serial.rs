//! JSON layout shared by every file format: complex numbers are `[re, im]`
//! pairs, matrices are row-major nested arrays, and each object carries `dim`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{DensityMatrix, HermitianOperator, Ket, C64};
use crate::error::{Error, Result};

pub type ComplexPair = [f64; 2];

fn pair(z: C64) -> ComplexPair {
    [z.re, z.im]
}

fn rounded_pair(z: C64, scale: f64) -> ComplexPair {
    let r = |x: f64| {
        let v = (x * scale).round() / scale;
        if v == 0.0 {
            0.0
        } else {
            v
        }
    };
    [r(z.re), r(z.im)]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixJson {
    pub dim: usize,
    pub entries: Vec<Vec<ComplexPair>>,
}

impl MatrixJson {
    pub fn from_matrix(m: &DMatrix<C64>) -> Self {
        Self {
            dim: m.nrows(),
            entries: (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| pair(m[(i, j)])).collect())
                .collect(),
        }
    }

    pub fn to_matrix(&self) -> Result<DMatrix<C64>> {
        if self.entries.len() != self.dim || self.entries.iter().any(|r| r.len() != self.dim) {
            return Err(Error::Config(format!(
                "matrix entries do not form a {0}x{0} array",
                self.dim
            )));
        }
        Ok(DMatrix::from_fn(self.dim, self.dim, |i, j| {
            let [re, im] = self.entries[i][j];
            C64::new(re, im)
        }))
    }

    pub fn to_density(&self) -> Result<DensityMatrix> {
        DensityMatrix::new(self.to_matrix()?)
    }

    pub fn to_hermitian(&self) -> Result<HermitianOperator> {
        HermitianOperator::new(self.to_matrix()?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KetJson {
    pub dim: usize,
    pub amplitudes: Vec<ComplexPair>,
}

impl KetJson {
    pub fn from_ket(k: &Ket) -> Self {
        Self {
            dim: k.dim(),
            amplitudes: k.amplitudes().iter().map(|z| pair(*z)).collect(),
        }
    }

    /// Amplitudes rounded to `decimals` places, with `-0` folded to `0`.
    pub fn from_ket_rounded(k: &Ket, decimals: i32) -> Self {
        let scale = 10f64.powi(decimals);
        Self {
            dim: k.dim(),
            amplitudes: k
                .amplitudes()
                .iter()
                .map(|z| rounded_pair(*z, scale))
                .collect(),
        }
    }

    pub fn to_ket(&self) -> Result<Ket> {
        if self.amplitudes.len() != self.dim {
            return Err(Error::Config(format!(
                "ket has {} amplitudes but dim {}",
                self.amplitudes.len(),
                self.dim
            )));
        }
        let v = DVector::from_iterator(
            self.dim,
            self.amplitudes.iter().map(|[re, im]| C64::new(*re, *im)),
        );
        Ket::normalize(v).map(|(k, _)| k)
    }
}

/// Either representation, tagged by `kind`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StateJson {
    Ket(KetJson),
    Matrix(MatrixJson),
}

impl StateJson {
    pub fn dim(&self) -> usize {
        match self {
            StateJson::Ket(k) => k.dim,
            StateJson::Matrix(m) => m.dim,
        }
    }
}

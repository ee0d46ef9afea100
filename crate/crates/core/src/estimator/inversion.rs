//! Linear inversion of `w_i Tr(rho Pi_i) = f_i` without a positivity
//! constraint.
//!
//! `rho` is written as `I/d + sum_k c_k B_k` in an orthonormal basis of
//! traceless Hermitian matrices, so unit trace holds exactly and the real
//! coefficients `c` solve an ordinary least-squares problem. The
//! minimum-norm solution comes from the SVD pseudo-inverse, which the solver
//! caches so that repeated records on one POM cost a matrix-vector product.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::hilbert::{eig_hermitian, DensityMatrix, HermitianOperator, C64};
use crate::likelihood::FrequencyTable;
use crate::measurement::Pom;

/// Singular values below this fraction of the largest are treated as zero.
pub const RANK_TOL: f64 = 1e-10;
/// Eigenvalues below `-NEGATIVITY_TOL` make a reconstruction non-physical.
pub const NEGATIVITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy)]
enum Generator {
    Symmetric(usize, usize),
    Antisymmetric(usize, usize),
    Diagonal(usize),
}

fn generators(dim: usize) -> Vec<Generator> {
    let mut out = Vec::with_capacity(dim * dim - 1);
    for j in 0..dim {
        for k in j + 1..dim {
            out.push(Generator::Symmetric(j, k));
            out.push(Generator::Antisymmetric(j, k));
        }
    }
    out.extend((1..dim).map(Generator::Diagonal));
    out
}

impl Generator {
    /// `Tr(B E)` for a Hermitian `E`.
    fn pair_with(&self, e: &DMatrix<C64>) -> f64 {
        let s2 = std::f64::consts::SQRT_2;
        match *self {
            Generator::Symmetric(j, k) => s2 * e[(j, k)].re,
            Generator::Antisymmetric(j, k) => -s2 * e[(j, k)].im,
            Generator::Diagonal(l) => {
                let head: f64 = (0..l).map(|m| e[(m, m)].re).sum();
                (head - l as f64 * e[(l, l)].re) / ((l * (l + 1)) as f64).sqrt()
            }
        }
    }

    fn add_to(&self, rho: &mut DMatrix<C64>, c: f64) {
        let h = c / std::f64::consts::SQRT_2;
        match *self {
            Generator::Symmetric(j, k) => {
                rho[(j, k)] += C64::new(h, 0.0);
                rho[(k, j)] += C64::new(h, 0.0);
            }
            Generator::Antisymmetric(j, k) => {
                rho[(j, k)] += C64::new(0.0, -h);
                rho[(k, j)] += C64::new(0.0, h);
            }
            Generator::Diagonal(l) => {
                let norm = ((l * (l + 1)) as f64).sqrt();
                for m in 0..l {
                    rho[(m, m)] += C64::new(c / norm, 0.0);
                }
                rho[(l, l)] -= C64::new(c * l as f64 / norm, 0.0);
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct InversionSolution {
    /// Hermitian with unit trace; not necessarily positive.
    pub rho_raw: HermitianOperator,
    pub min_eigenvalue: f64,
    /// Euclidean norm of `w_i Tr(rho Pi_i) - f_i` over all effects.
    pub constraint_residual: f64,
    pub max_abs_residual: f64,
    pub rank: usize,
    /// Number of free real parameters, `dim^2 - 1`.
    pub parameters: usize,
}

impl InversionSolution {
    pub fn rank_deficiency(&self) -> usize {
        self.parameters - self.rank
    }

    pub fn non_physical(&self) -> bool {
        self.min_eigenvalue < -NEGATIVITY_TOL
    }

    /// Nearest state obtained by zeroing negative eigenvalues and
    /// renormalizing. Used only to evaluate likelihoods of the baseline.
    pub fn clipped(&self) -> Result<DensityMatrix> {
        clip_to_density(&self.rho_raw)
    }
}

/// Zeroes the negative eigenvalues of `h` and renormalizes to unit trace.
pub fn clip_to_density(h: &HermitianOperator) -> Result<DensityMatrix> {
    let eig = eig_hermitian(h);
    let dim = h.dim();
    let mut m = DMatrix::<C64>::zeros(dim, dim);
    for (l, v) in eig.eigenvalues.iter().zip(&eig.eigenvectors) {
        if *l > 0.0 {
            m += v.projector().scale(*l);
        }
    }
    DensityMatrix::from_psd_unnormalized(m)
}

/// Pseudo-inverse of the design matrix of one POM.
#[derive(Debug, Clone)]
pub struct InversionSolver {
    dim: usize,
    generators: Vec<Generator>,
    design: DMatrix<f64>,
    pinv: DMatrix<f64>,
    /// `Tr(E_i) / d`, the part of each probability fixed by unit trace.
    identity_part: DVector<f64>,
    rank: usize,
}

impl InversionSolver {
    pub fn new(pom: &Pom) -> Result<Self> {
        let dim = pom.dim();
        let generators = generators(dim);
        let n = pom.len();
        let p = generators.len();
        if p == 0 {
            return Err(Error::DimensionTooSmall { min: 2, found: dim });
        }
        let mut design = DMatrix::<f64>::zeros(n, p);
        let mut identity_part = DVector::<f64>::zeros(n);
        for (i, e) in pom.effects().iter().enumerate() {
            let m = e.operator.matrix().scale(e.weight);
            identity_part[i] = m.trace().re / dim as f64;
            for (k, g) in generators.iter().enumerate() {
                design[(i, k)] = g.pair_with(&m);
            }
        }
        let svd = design.clone().svd(true, true);
        let smax = svd.singular_values.max();
        let cutoff = RANK_TOL * smax;
        let rank = svd.singular_values.iter().filter(|s| **s > cutoff).count();
        let pinv = svd
            .pseudo_inverse(cutoff)
            .map_err(|e| Error::InvalidState(format!("pseudo-inverse failed: {e}")))?;
        if rank < p {
            log::info!("inversion design has rank {rank} of {p}; minimum-norm solution used");
        }
        Ok(Self {
            dim,
            generators,
            design,
            pinv,
            identity_part,
            rank,
        })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn solve(&self, pom: &Pom, ft: &FrequencyTable) -> Result<InversionSolution> {
        if pom.len() != self.design.nrows() || pom.dim() != self.dim {
            return Err(Error::InvalidArgument("solver was built for a different POM".into()));
        }
        ft.check_against(pom)?;
        let mut b = -self.identity_part.clone();
        for (id, f) in ft.outcomes().iter().zip(ft.frequencies()) {
            b[pom.position(*id)?] += f;
        }
        let c = &self.pinv * &b;
        let resid = &self.design * &c - &b;
        let mut rho = DMatrix::<C64>::identity(self.dim, self.dim).unscale(self.dim as f64);
        for (g, ck) in self.generators.iter().zip(c.iter()) {
            g.add_to(&mut rho, *ck);
        }
        let rho_raw = HermitianOperator::new(rho)?;
        Ok(InversionSolution {
            min_eigenvalue: rho_raw.min_eigenvalue(),
            rho_raw,
            constraint_residual: resid.norm(),
            max_abs_residual: resid.amax(),
            rank: self.rank,
            parameters: self.generators.len(),
        })
    }
}

pub fn estimate_inversion(pom: &Pom, ft: &FrequencyTable) -> Result<InversionSolution> {
    InversionSolver::new(pom)?.solve(pom, ft)
}

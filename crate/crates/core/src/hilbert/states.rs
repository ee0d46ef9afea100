//! Standard constructors in the truncated Fock basis.
//!
//! Every constructor that cuts an infinite-dimensional object down to `dim`
//! levels reports the probability weight it discarded, so callers can decide
//! whether the truncation is acceptable.

use nalgebra::{DMatrix, DVector};

use super::ket::Ket;
use super::operator::{DensityMatrix, HermitianOperator};
use super::C64;
use crate::error::{Error, Result};

/// Truncation weight above which constructors log a warning.
pub const TRUNCATION_WARN: f64 = 1e-6;
/// Trace loss above which the displaced thermal constructor warns.
pub const TRACE_LOSS_WARN: f64 = 1e-3;

/// A truncated construction and the weight that fell outside the basis.
#[derive(Debug, Clone)]
pub struct Truncated<T> {
    pub value: T,
    pub truncation_weight: f64,
}

fn check_complex(z: C64, what: &str) -> Result<()> {
    if z.re.is_finite() && z.im.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite(what.into()))
    }
}

fn check_dim(dim: usize, min: usize) -> Result<()> {
    if dim < min {
        Err(Error::DimensionTooSmall { min, found: dim })
    } else {
        Ok(())
    }
}

/// Unnormalized truncated coherent amplitudes and the Poisson tail beyond `dim`.
pub(crate) fn coherent_amplitudes(alpha: C64, dim: usize) -> (DVector<C64>, f64) {
    let mean = alpha.norm_sqr();
    let mut amps = DVector::zeros(dim);
    let mut c = C64::new((-mean / 2.0).exp(), 0.0);
    for k in 0..dim {
        amps[k] = c;
        c *= alpha / ((k + 1) as f64).sqrt();
    }
    // Tail sum_{k >= dim} e^{-m} m^k / k!, summed forward past the Poisson bulk.
    let mut tail = 0.0;
    let mut term = c.norm_sqr();
    let mut k = dim;
    let stop = dim + (mean + 40.0 * mean.sqrt() + 60.0) as usize;
    while k < stop {
        tail += term;
        term *= mean / (k + 1) as f64;
        k += 1;
        if term < 1e-300 || (k as f64 > mean && term < tail * 1e-18) {
            break;
        }
    }
    (amps, tail.min(1.0))
}

/// Coherent state `|alpha>` truncated to `dim` levels and renormalized.
pub fn coherent_state(alpha: C64, dim: usize) -> Result<Truncated<Ket>> {
    check_complex(alpha, "coherent amplitude")?;
    check_dim(dim, 1)?;
    let (amps, tail) = coherent_amplitudes(alpha, dim);
    if tail > TRUNCATION_WARN {
        log::warn!(
            "coherent state alpha={alpha} loses weight {tail:.3e} at dim {dim}"
        );
    }
    let (ket, _) = Ket::normalize(amps)?;
    Ok(Truncated {
        value: ket,
        truncation_weight: tail,
    })
}

/// Annihilation operator in the truncated basis.
pub fn annihilation(dim: usize) -> DMatrix<C64> {
    DMatrix::from_fn(dim, dim, |i, j| {
        if j == i + 1 {
            C64::new((j as f64).sqrt(), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

pub fn number_operator(dim: usize) -> HermitianOperator {
    let diag: Vec<f64> = (0..dim).map(|k| k as f64).collect();
    HermitianOperator::from_real_diagonal(&diag)
}

/// Quadrature `x_phi = (a e^{-i phi} + a^dagger e^{i phi}) / sqrt(2)`; vacuum variance 1/2.
pub fn quadrature_operator(phi: f64, dim: usize) -> Result<HermitianOperator> {
    if !phi.is_finite() {
        return Err(Error::NonFinite("quadrature phase".into()));
    }
    check_dim(dim, 2)?;
    let a = annihilation(dim);
    let rot = C64::from_polar(1.0, -phi);
    let x = (a.scale(1.0).map(|z| z * rot) + a.adjoint().map(|z| z * rot.conj()))
        .unscale(std::f64::consts::SQRT_2);
    Ok(HermitianOperator::from_matrix_unchecked(x))
}

/// Thermal state with mean photon number `mean_n`, truncated and renormalized.
pub fn thermal_state(mean_n: f64, dim: usize) -> Result<Truncated<DensityMatrix>> {
    if !(mean_n >= 0.0 && mean_n.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "mean photon number must be finite and non-negative, got {mean_n}"
        )));
    }
    check_dim(dim, 1)?;
    let p = thermal_populations(mean_n, dim);
    let kept: f64 = p.iter().sum();
    let rho = DensityMatrix::from_psd_unnormalized(
        HermitianOperator::from_real_diagonal(&p).into_matrix(),
    )?;
    Ok(Truncated {
        value: rho,
        truncation_weight: 1.0 - kept,
    })
}

fn thermal_populations(mean_n: f64, len: usize) -> Vec<f64> {
    if mean_n == 0.0 {
        let mut p = vec![0.0; len];
        p[0] = 1.0;
        return p;
    }
    let q = mean_n / (1.0 + mean_n);
    let mut p = Vec::with_capacity(len);
    let mut v = 1.0 / (1.0 + mean_n);
    for _ in 0..len {
        p.push(v);
        v *= q;
    }
    p
}

fn ln_factorials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for k in 1..=n {
        acc += (k as f64).ln();
        out.push(acc);
    }
    out
}

/// Generalized Laguerre polynomial `L_n^{(beta)}(x)` by upward recurrence.
fn laguerre(n: usize, beta: f64, x: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 1.0 + beta - x;
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 + beta - x) * cur - (kf + beta) * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// Fock matrix element `<m|D(alpha)|n>` of the displacement operator.
fn displacement_element(m: usize, n: usize, alpha: C64, lnf: &[f64]) -> C64 {
    let x = alpha.norm_sqr();
    if x == 0.0 {
        return if m == n { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
    }
    // <m|D(a)|n> = sqrt(n!/m!) a^{m-n} e^{-|a|^2/2} L_n^{(m-n)}(|a|^2) for m >= n,
    // and D(a)^dagger = D(-a) for the other triangle.
    let (hi, lo, z) = if m >= n { (m, n, alpha) } else { (n, m, -alpha) };
    let k = hi - lo;
    let ln_mag = 0.5 * (lnf[lo] - lnf[hi]) + k as f64 * z.norm().ln() - x / 2.0;
    let val = C64::from_polar(ln_mag.exp(), k as f64 * z.arg()) * laguerre(lo, k as f64, x);
    if m >= n {
        val
    } else {
        val.conj()
    }
}

/// `D(alpha) rho_th(mean_n) D(alpha)^dagger`, truncated to `dim` and renormalized.
///
/// Built from exact Fock matrix elements of the displacement operator, so it
/// serves as an oracle independent of coherent-state averaging.
pub fn displaced_thermal(alpha: C64, mean_n: f64, dim: usize) -> Result<Truncated<DensityMatrix>> {
    check_complex(alpha, "displacement amplitude")?;
    if !(mean_n >= 0.0 && mean_n.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "mean photon number must be finite and non-negative, got {mean_n}"
        )));
    }
    check_dim(dim, 1)?;
    let levels = if mean_n == 0.0 {
        1
    } else {
        let q = mean_n / (1.0 + mean_n);
        ((1e-17f64).ln() / q.ln()).ceil() as usize
    };
    let inner = levels.clamp(1, 4000);
    let p = thermal_populations(mean_n, inner);
    let lnf = ln_factorials(dim.max(inner) + 1);
    let d = DMatrix::from_fn(dim, inner, |m, k| displacement_element(m, k, alpha, &lnf));
    let weighted = DMatrix::from_fn(dim, inner, |m, k| d[(m, k)] * p[k]);
    let rho = &weighted * d.adjoint();
    let kept = rho.trace().re;
    let loss = 1.0 - kept;
    if loss > TRACE_LOSS_WARN {
        log::warn!(
            "displaced thermal state alpha={alpha}, mean_n={mean_n} loses trace {loss:.3e} at dim {dim}"
        );
    }
    Ok(Truncated {
        value: DensityMatrix::from_psd_unnormalized(rho)?,
        truncation_weight: loss,
    })
}

use super::eig::{eigh, psd_sqrt};
use super::ket::check_dims;
use super::operator::StateRef;
use crate::error::Result;

/// Fidelity between two states, clamped to `[0, 1]`.
///
/// Pure-pure is `|<a|b>|^2`, pure-mixed is `<a|rho|a>`, and mixed-mixed is the
/// Uhlmann fidelity `(Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2`.
pub fn fidelity<'a, 'b>(a: impl Into<StateRef<'a>>, b: impl Into<StateRef<'b>>) -> Result<f64> {
    let a = a.into();
    let b = b.into();
    check_dims(a.dim(), b.dim())?;
    let f = match (a, b) {
        (StateRef::Pure(x), StateRef::Pure(y)) => x.inner(y)?.norm_sqr(),
        (StateRef::Pure(x), m @ StateRef::Mixed(_)) | (m @ StateRef::Mixed(_), StateRef::Pure(x)) => {
            m.ket_expectation(x)?
        }
        (StateRef::Mixed(r), StateRef::Mixed(s)) => {
            let sr = psd_sqrt(r.matrix());
            let inner = &sr * s.matrix() * &sr;
            let (vals, _) = eigh(&inner);
            let t: f64 = vals.iter().map(|v| v.max(0.0).sqrt()).sum();
            t * t
        }
    };
    Ok(f.clamp(0.0, 1.0))
}

//! Levenberg-Marquardt damped Newton ascent of the pure-state log-likelihood
//! `sum_i f_i ln |<k_i|w>|^2 / <w|w>` in real coordinates `r = [Re w; Im w]`.

use nalgebra::{DMatrix, DVector};

use crate::hilbert::C64;

const GRAD_TOL: f64 = 1e-13;
const MU_START: f64 = 1e-3;
const MU_MAX: f64 = 1e16;
const REFINE_STEPS: usize = 8;
const REFINE_SHIFT: f64 = 1e-12;
const PLATEAU_ULPS: f64 = 64.0;

/// Pure-state objective over a set of (not necessarily normalized) kets.
pub(crate) struct PureObjective<'a> {
    pub kets: &'a [DVector<C64>],
    pub f: &'a [f64],
}

impl PureObjective<'_> {
    /// Squared overlaps `|<k_i|w>|^2` for a normalized `w`.
    pub fn overlaps(&self, w: &DVector<C64>) -> Vec<f64> {
        self.kets.iter().map(|k| k.dotc(w).norm_sqr()).collect()
    }

    /// Per-datum log-likelihood of the normalized `w`, `-inf` if any overlap vanishes.
    pub fn value(&self, w: &DVector<C64>) -> f64 {
        let n2 = w.norm_squared();
        self.kets
            .iter()
            .zip(self.f)
            .map(|(k, f)| {
                let u = k.dotc(w).norm_sqr() / n2;
                if u > 0.0 {
                    f * u.ln()
                } else {
                    f64::NEG_INFINITY
                }
            })
            .sum()
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Ascent {
    pub w: DVector<C64>,
    pub value: f64,
    pub steps: usize,
    /// Objective after each accepted step.
    pub trace: Vec<f64>,
}

fn realify_vec(w: &DVector<C64>) -> DVector<f64> {
    let m = w.len();
    DVector::from_fn(2 * m, |i, _| if i < m { w[i].re } else { w[i - m].im })
}

fn complexify(r: &DVector<f64>) -> DVector<C64> {
    let m = r.len() / 2;
    DVector::from_fn(m, |i, _| C64::new(r[i], r[i + m]))
}

/// `[[Re A, -Im A], [Im A, Re A]]`, so that `w^dagger A w = r^T M r`.
fn realify_mat(a: &DMatrix<C64>) -> DMatrix<f64> {
    let m = a.nrows();
    DMatrix::from_fn(2 * m, 2 * m, |i, j| {
        let z = a[(i % m, j % m)];
        match (i < m, j < m) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    })
}

/// Gradient and Hessian of `h = -sum f ln |<k|w>|^2 + ln <w|w>` at a normalized `w`.
fn derivatives(obj: &PureObjective<'_>, w: &DVector<C64>) -> (DVector<f64>, DMatrix<f64>) {
    let m = w.len();
    let r = realify_vec(w);
    // grad u = 2 M r for u = |<k|w>|^2
    let mut grad = r.scale(2.0);
    let mut hess = DMatrix::<f64>::identity(2 * m, 2 * m).scale(2.0) - (&r * r.transpose()).scale(4.0);
    let mut curvature = DMatrix::<C64>::zeros(m, m);
    for (k, f) in obj.kets.iter().zip(obj.f) {
        let c = k.dotc(w);
        let u = c.norm_sqr();
        let gu = realify_vec(&(k * c)).scale(2.0);
        grad -= gu.scale(f / u);
        hess += (&gu * gu.transpose()).scale(f / (u * u));
        curvature += (k * k.adjoint()).scale(2.0 * f / u);
    }
    hess -= realify_mat(&curvature);
    (grad, hess)
}

fn damped_step(hess: &DMatrix<f64>, grad: &DVector<f64>, mu: f64) -> Option<DVector<f64>> {
    let n = hess.nrows();
    let damped = hess + DMatrix::<f64>::identity(n, n).scale(mu);
    damped.cholesky().map(|chol| chol.solve(&(-grad)))
}

/// Maximizes the objective from `start`. Returns `start` untouched when its
/// value is not finite.
///
/// Once no step improves the value by a representable amount, a few more
/// nearly undamped Newton steps are taken as long as they halve the gradient
/// and keep the value within rounding of the best one: near the optimum the
/// value is flat to machine precision while the maximizer is still only known
/// to about the square root of it. `value` stays the best value seen.
pub(crate) fn ascend(obj: &PureObjective<'_>, start: &DVector<C64>, max_steps: usize) -> Ascent {
    // a unit start is kept bit for bit so that its value matches the caller's
    let mut w = if (start.norm() - 1.0).abs() > 1e-12 {
        start.normalize()
    } else {
        start.clone()
    };
    let mut value = obj.value(&w);
    let mut out = Ascent {
        w: w.clone(),
        value,
        steps: 0,
        trace: Vec::new(),
    };
    if !value.is_finite() {
        return out;
    }
    let mut mu = MU_START;
    while out.steps < max_steps {
        let (grad, hess) = derivatives(obj, &w);
        if grad.norm() <= GRAD_TOL {
            break;
        }
        let r = realify_vec(&w);
        let accepted = loop {
            if mu > MU_MAX {
                break false;
            }
            let Some(step) = damped_step(&hess, &grad, mu) else {
                mu *= 4.0;
                continue;
            };
            let trial = complexify(&(&r + step)).normalize();
            let trial_value = obj.value(&trial);
            if trial_value > value {
                w = trial;
                value = trial_value;
                mu = (mu / 3.0).max(1e-15);
                break true;
            }
            mu *= 4.0;
        };
        if !accepted {
            break;
        }
        out.steps += 1;
        out.trace.push(value);
    }
    for _ in 0..REFINE_STEPS {
        if out.steps >= max_steps {
            break;
        }
        let (grad, hess) = derivatives(obj, &w);
        let g = grad.norm();
        if g <= GRAD_TOL {
            break;
        }
        // the phase direction is flat, so a tiny shift keeps the system definite
        let scale = hess.diagonal().amax().max(1.0);
        let Some(step) = damped_step(&hess, &grad, REFINE_SHIFT * scale) else {
                break;
        };
        let trial = complexify(&(realify_vec(&w) + step)).normalize();
        let trial_value = obj.value(&trial);
        let plateau = PLATEAU_ULPS * f64::EPSILON * value.abs().max(1.0);
        if !(trial_value >= value - plateau) || derivatives(obj, &trial).0.norm() > 0.5 * g {
            break;
        }
        // the value is unchanged to rounding, so the trace records nothing
        w = trial;
        value = value.max(trial_value);
        out.steps += 1;
    }
    out.w = w;
    out.value = value;
    out
}

mod common;

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::sync::{Mutex, Once};

use common::*;
use nalgebra::DMatrix;
use qtomo::hilbert::{
    coherent_state, displaced_thermal, eig_hermitian, fidelity, inner, max_eigen_bound,
    number_operator, quadrature_operator, DensityMatrix, HermitianOperator, Ket, C64,
};
use qtomo::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

static LOGGER: Capture = Capture(Mutex::new(Vec::new()));
static INIT: Once = Once::new();

struct Capture(Mutex<Vec<(log::Level, String)>>);

impl log::Log for Capture {
    fn enabled(&self, _: &log::Metadata) -> bool {
        true
    }
    fn log(&self, record: &log::Record) {
        self.0
            .lock()
            .unwrap()
            .push((record.level(), record.args().to_string()));
    }
    fn flush(&self) {}
}

fn captured_warnings() -> Vec<String> {
    INIT.call_once(|| {
        log::set_logger(&LOGGER).unwrap();
        log::set_max_level(log::LevelFilter::Trace);
    });
    LOGGER
        .0
        .lock()
        .unwrap()
        .iter()
        .filter(|(l, _)| *l == log::Level::Warn)
        .map(|(_, m)| m.clone())
        .collect()
}

fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

#[test]
fn vacuum_coherent_state_is_fock_vacuum() {
    let t = coherent_state(c(0.0, 0.0), 8).unwrap();
    assert_eq!(t.truncation_weight, 0.0);
    assert_eq!(t.value, Ket::vacuum(8).unwrap());
}

#[test]
fn coherent_overlap_matches_closed_form() {
    let y0 = coherent(c(0.0, 0.0), 32);
    let y1 = coherent(c(1.0, 0.0), 32);
    let overlap = inner(&y1, &y0).unwrap().norm_sqr();
    assert!((overlap - (-1.0f64).exp()).abs() < 1e-10);
    assert!((inner(&y0, &y1).unwrap().norm_sqr() - (-1.0f64).exp()).abs() < 1e-10);
}

#[test]
fn coherent_amplitudes_follow_the_poisson_series() {
    let alpha = c(0.7, -0.4);
    let k = coherent(alpha, 32);
    let norm = (-alpha.norm_sqr() / 2.0).exp();
    for n in 0..32u32 {
        let expected = alpha.powu(n) * norm / factorial(n).sqrt();
        assert!((k.amplitudes()[n as usize] - expected).norm() < 1e-12);
    }
}

#[test]
fn heavy_truncation_is_reported_and_warned() {
    let before = captured_warnings().len();
    let t = coherent_state(c(2.0, 0.0), 4).unwrap();
    let tail = 1.0 - (0..4u32).map(|k| (-4.0f64).exp() * 4f64.powi(k as i32) / factorial(k)).sum::<f64>();
    assert!(t.truncation_weight > 0.1);
    assert!((t.truncation_weight - tail).abs() < 1e-12);
    assert!((t.value.norm_squared() - 1.0).abs() < 1e-12);
    let warnings = captured_warnings();
    assert!(warnings.len() > before, "no warning was logged");
    assert!(warnings[before..].iter().any(|m| m.contains("loses weight")));
}

#[test]
fn non_finite_alpha_is_rejected() {
    assert!(coherent_state(c(f64::NAN, 0.0), 4).is_err());
    assert!(coherent_state(c(0.0, f64::INFINITY), 4).is_err());
}

#[test]
fn basis_inner_products() {
    let e0 = Ket::basis(0, 3).unwrap();
    let e1 = Ket::basis(1, 3).unwrap();
    assert_eq!(inner(&e0, &e0).unwrap(), c(1.0, 0.0));
    assert_eq!(inner(&e0, &e1).unwrap(), c(0.0, 0.0));
    let e_other = Ket::basis(0, 4).unwrap();
    assert!(matches!(
        inner(&e0, &e_other),
        Err(Error::DimensionMismatch { .. })
    ));
}

#[test]
fn inner_is_conjugate_linear_in_the_first_argument() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let a = random_ket(&mut rng, 5);
    let b = random_ket(&mut rng, 5);
    let phase = C64::from_polar(1.0, 0.9);
    let ab = inner(&a, &b).unwrap();
    assert!((inner(&a.with_phase(phase), &b).unwrap() - phase.conj() * ab).norm() < 1e-14);
    assert!((inner(&b, &a).unwrap() - ab.conj()).norm() < 1e-14);
    let aa = inner(&a, &a).unwrap();
    assert!(aa.im.abs() < 1e-15 && aa.re > 0.0);
}

#[test]
fn diagonal_spectrum() {
    let h = HermitianOperator::from_real_diagonal(&[1.0, 2.0, 3.0]);
    let e = eig_hermitian(&h);
    assert_eq!(e.eigenvalues.len(), 3);
    for (i, (l, v)) in e.eigenvalues.iter().zip(&e.eigenvectors).enumerate() {
        assert!((l - (i + 1) as f64).abs() < 1e-14);
        assert!((v.amplitudes()[i].norm() - 1.0).abs() < 1e-14);
    }
    assert!(!e.degenerate);
}

#[test]
fn identity_is_degenerate() {
    let e = eig_hermitian(&HermitianOperator::identity(4));
    assert!(e.eigenvalues.iter().all(|l| (l - 1.0).abs() < 1e-14));
    assert!(e.degenerate);
}

#[test]
fn non_hermitian_input_is_rejected() {
    let m = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
    assert!(matches!(
        HermitianOperator::new(m),
        Err(Error::NotHermitian { .. })
    ));
}

#[test]
fn two_coherent_r_operator_top_eigenvalue() {
    // R = |y1><y1| + |y2><y2| at the fixed point a = (1, 1) with counts (1, 1)
    let y1 = coherent(c(0.0, 0.0), 32);
    let y2 = coherent(c(0.8, 0.5), 32);
    let r = HermitianOperator::new(y1.projector() + y2.projector()).unwrap();
    let c12 = inner(&y1, &y2).unwrap().norm();
    let (top, _) = eig_hermitian(&r).top();
    assert!((top - (1.0 + c12)).abs() < 1e-12);
}

#[test]
fn max_eigen_bound_with_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let rho = random_density(&mut rng, 5);
    let b = max_eigen_bound(&rho, &HermitianOperator::identity(5)).unwrap();
    assert!((b.bound - 1.0).abs() < 1e-14);
    assert!((b.expectation - 1.0).abs() < 1e-14);
}

#[test]
fn max_eigen_bound_equality_on_top_projector() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let g = random_density(&mut rng, 6);
    let b = HermitianOperator::new(g.matrix().clone()).unwrap();
    let top = max_eigen_bound(&DensityMatrix::maximally_mixed(6).unwrap(), &b).unwrap();
    let at_top = max_eigen_bound(&DensityMatrix::from_pure(&top.attaining_state), &b).unwrap();
    assert!((at_top.expectation - at_top.bound).abs() < 1e-12);
}

#[test]
fn max_eigen_bound_dimension_mismatch() {
    let rho = DensityMatrix::maximally_mixed(3).unwrap();
    assert!(max_eigen_bound(&rho, &HermitianOperator::identity(4)).is_err());
}

#[test]
fn quadrature_matrix_elements() {
    let x = quadrature_operator(0.0, 2).unwrap();
    assert!((x.matrix()[(0, 1)] - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
    assert!((x.matrix()[(1, 0)] - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
    let p = quadrature_operator(PI / 2.0, 2).unwrap();
    // x_phi = (a e^{-i phi} + a^dag e^{i phi}) / sqrt 2, so <0|x_phi|1> = e^{-i phi} / sqrt 2
    assert!((p.matrix()[(0, 1)] - c(0.0, -FRAC_1_SQRT_2)).norm() < 1e-15);
    assert!((p.matrix()[(1, 0)] - c(0.0, FRAC_1_SQRT_2)).norm() < 1e-15);
    assert!(quadrature_operator(0.0, 1).is_err());
}

#[test]
fn quadrature_spectrum_is_the_hermite_roots() {
    // the truncated position operator is the Jacobi matrix of the Hermite
    // functions; the oracle finds the roots by bisection on the recurrence
    let x = quadrature_operator(0.3, 64).unwrap();
    let spectrum = eig_hermitian(&x).eigenvalues;
    let roots = hermite_roots(64);
    assert_eq!(roots.len(), 64);
    for (l, r) in spectrum.iter().zip(&roots) {
        assert!((l - r).abs() < 1e-9, "{l} vs {r}");
    }
}

#[test]
fn displaced_thermal_limits() {
    let vac = displaced_thermal(c(0.0, 0.0), 0.0, 8).unwrap().value;
    assert!((fidelity(&vac, &Ket::vacuum(8).unwrap()).unwrap() - 1.0).abs() < 1e-14);

    let th = displaced_thermal(c(0.0, 0.0), 1.0, 40).unwrap().value;
    let norm: f64 = (0..40).map(|k| 0.5f64.powi(k + 1)).sum();
    for k in 0..40 {
        let expected = 0.5f64.powi(k as i32 + 1) / norm;
        assert!((th.matrix()[(k, k)].re - expected).abs() < 1e-12);
    }
}

#[test]
fn displaced_thermal_mean_photon_number() {
    let rho = displaced_thermal(c(1.0, 0.0), 1.0, 48).unwrap().value;
    let mean = rho.trace_with(number_operator(48).matrix()).unwrap();
    assert!((mean - 2.0).abs() < 1e-6);
    assert!(displaced_thermal(c(0.0, 0.0), -1.0, 8).is_err());
}

#[test]
fn fidelity_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let rho = random_density(&mut rng, 4);
    assert!((fidelity(&rho, &rho).unwrap() - 1.0).abs() < 1e-10);
    let e0 = Ket::basis(0, 3).unwrap();
    let e1 = Ket::basis(1, 3).unwrap();
    assert_eq!(fidelity(&e0, &e1).unwrap(), 0.0);
    let f = fidelity(&coherent(c(0.0, 0.0), 32), &coherent(c(1.0, 0.0), 32)).unwrap();
    assert!((f - (-1.0f64).exp()).abs() < 1e-10);
    assert!(fidelity(&e0, &Ket::basis(0, 4).unwrap()).is_err());
}

#[test]
fn mixed_fidelity_agrees_with_pure_overlap() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let a = random_ket(&mut rng, 6);
    let rho = random_density(&mut rng, 6);
    let via_ket = fidelity(&a, &rho).unwrap();
    let via_matrix = fidelity(&DensityMatrix::from_pure(&a), &rho).unwrap();
    let direct = a.expectation(rho.matrix()).unwrap().re;
    assert!((via_ket - direct).abs() < 1e-10);
    // the matrix square root of a rank-one state turns rounding-level
    // eigenvalues into errors near their square root
    assert!((via_matrix - direct).abs() < 1e-7);
}

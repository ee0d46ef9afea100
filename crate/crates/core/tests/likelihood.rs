mod common;

use common::*;
use qtomo::estimator::{estimate_mle_pure, MleOptions};
use qtomo::hilbert::{eig_hermitian, inner, DensityMatrix, Ket};
use qtomo::likelihood::{
    gibbs_divergence, jensen_gap, log_likelihood, r_operator, upper_bound_state_independent,
    AuxWeights, FrequencyTable, OutcomeCount,
};
use qtomo::measurement::{forward, pom_custom, pom_fock_projective, Effect, EffectOperator, OutcomeId};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn ids(raw: &[u32]) -> Vec<OutcomeId> {
    raw.iter().map(|&i| OutcomeId(i)).collect()
}

fn table(counts: &[(u32, u64)]) -> FrequencyTable {
    FrequencyTable::from_counts(counts.iter().map(|&(id, count)| OutcomeCount {
        id: OutcomeId(id),
        count,
    }))
    .unwrap()
}

#[test]
fn tabulate_small_multisets() {
    let t = FrequencyTable::tabulate(ids(&[0, 0, 1])).unwrap();
    assert_eq!(t.outcomes(), &ids(&[0, 1])[..]);
    assert!((t.frequencies()[0] - 2.0 / 3.0).abs() < 1e-15);
    assert!((t.frequencies()[1] - 1.0 / 3.0).abs() < 1e-15);
    assert_eq!(t.n(), Some(3));

    let t = FrequencyTable::tabulate(ids(&[5])).unwrap();
    assert_eq!(t.outcomes(), &ids(&[5])[..]);
    assert_eq!(t.frequencies(), &[1.0]);

    assert!(FrequencyTable::tabulate(Vec::new()).is_err());
}

#[test]
fn zero_counts_are_dropped_and_duplicates_rejected() {
    let t = table(&[(0, 2), (3, 0), (4, 2)]);
    assert_eq!(t.outcomes(), &ids(&[0, 4])[..]);
    assert!(FrequencyTable::from_counts([
        OutcomeCount { id: OutcomeId(1), count: 1 },
        OutcomeCount { id: OutcomeId(1), count: 2 },
    ])
    .is_err());
}

#[test]
fn fair_coin_frequencies_concentrate() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let draws: Vec<OutcomeId> = (0..10_000).map(|_| OutcomeId(rng.random_range(0..2))).collect();
    let t = FrequencyTable::tabulate(draws).unwrap();
    let total: f64 = t.frequencies().iter().sum();
    assert!((total - 1.0).abs() < 1e-12);
    for f in t.frequencies() {
        assert!((f - 0.5).abs() < 0.02);
    }
}

#[test]
fn log_likelihood_examples() {
    let pom = pom_fock_projective(3).unwrap();
    let vac = Ket::vacuum(3).unwrap();
    let all_zero = table(&[(0, 7)]);
    assert_eq!(log_likelihood(&vac, &pom, &all_zero).unwrap().log_likelihood_per_datum, 0.0);

    let with_one = table(&[(0, 7), (1, 1)]);
    let v = log_likelihood(&vac, &pom, &with_one).unwrap();
    assert_eq!(v.log_likelihood_per_datum, f64::NEG_INFINITY);

    let pom2 = pom_fock_projective(2).unwrap();
    let mixed = DensityMatrix::maximally_mixed(2).unwrap();
    for counts in [[(0, 1), (1, 9)], [(0, 5), (1, 5)], [(0, 13), (1, 2)]] {
        let v = log_likelihood(&mixed, &pom2, &table(&counts)).unwrap();
        assert!((v.log_likelihood_per_datum - 0.5f64.ln()).abs() < 1e-15);
        assert_eq!(v.measure_offset, 0.0);
    }

    let unknown = table(&[(9, 1)]);
    assert!(log_likelihood(&vac, &pom, &unknown).is_err());
}

#[test]
fn likelihood_is_invariant_under_data_permutation() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let pom = random_bases_pom(&mut rng, 4, 3);
    let rho = random_density(&mut rng, 4);
    let mut draws: Vec<OutcomeId> = (0..200).map(|_| OutcomeId(rng.random_range(0..12))).collect();
    let base = log_likelihood(&rho, &pom, &FrequencyTable::tabulate(draws.clone()).unwrap()).unwrap();
    for _ in 0..5 {
        draws.shuffle(&mut rng);
        let v = log_likelihood(&rho, &pom, &FrequencyTable::tabulate(draws.clone()).unwrap()).unwrap();
        assert_eq!(v, base);
    }
}

#[test]
fn r_operator_with_a_equal_to_f_sums_the_projectors() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let kets: Vec<Ket> = (0..4).map(|_| random_ket(&mut rng, 5)).collect();
    let effects = kets
        .iter()
        .enumerate()
        .map(|(i, k)| Effect {
            id: OutcomeId(i as u32),
            operator: EffectOperator::Rank1 {
                ket: k.clone(),
                scale: 0.1,
            },
            weight: 1.0,
            label: None,
        })
        .collect();
    let pom = pom_custom(5, effects).unwrap();
    let ft = table(&[(0, 1), (1, 4), (3, 2)]);
    let r = r_operator(&pom, &ft, &AuxWeights::from_frequencies(&ft)).unwrap();
    // weights are stored max-gauged, so a = f / max f and R = max f * sum Pi
    let expected = (kets[0].projector() + kets[1].projector() + kets[3].projector()).scale(4.0 / 7.0);
    assert!((r.matrix() - expected).norm() < 1e-13);

    let single = table(&[(2, 3)]);
    let r = r_operator(&pom, &single, &AuxWeights::new(vec![1.0]).unwrap()).unwrap();
    assert!((r.matrix() - kets[2].projector()).norm() < 1e-14);
}

#[test]
fn r_operator_two_coherent_outcomes() {
    let y1 = coherent(c(-0.4, 0.2), 24);
    let y2 = coherent(c(0.9, 0.1), 24);
    let pom = pom_at_points(&[c(-0.4, 0.2), c(0.9, 0.1)], 24, 0.04);
    let ft = table(&[(0, 1), (1, 1)]);
    let r = r_operator(&pom, &ft, &AuxWeights::new(vec![1.0, 1.0]).unwrap()).unwrap();
    let c12 = inner(&y1, &y2).unwrap().norm();
    let (top, _) = eig_hermitian(&r).top();
    assert!((top - (1.0 + c12) / 2.0).abs() < 1e-12);
    assert!(AuxWeights::new(vec![1.0, 0.0]).is_err());
}

#[test]
fn jensen_equality_at_x_equal_a() {
    let x = [0.2, 0.5, 0.3];
    let g = jensen_gap(&x, &x, &[0.1, 0.6, 0.3]).unwrap();
    assert!((g.lhs - 1.0).abs() < 1e-15 && (g.rhs - 1.0).abs() < 1e-15);
}

#[test]
fn gibbs_is_the_a_equal_f_case() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..1000 {
        let f = random_simplex(&mut rng, 5);
        let x = random_simplex(&mut rng, 5);
        let g = jensen_gap(&x, &f, &f).unwrap();
        assert!(g.holds(1e-12));
        let d = gibbs_divergence(&f, &x);
        assert!(d >= -1e-15);
        // with a = f: ln lhs = -D(f||x) and rhs = sum x = 1
        assert!((g.lhs.ln() + d).abs() < 1e-10);
        assert!((g.rhs - 1.0).abs() < 1e-12);
    }
}

#[test]
fn jensen_never_fails_on_random_triples() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..10_000 {
        let len = rng.random_range(1..8);
        let x = random_simplex(&mut rng, len);
        let f = random_simplex(&mut rng, len);
        let a: Vec<f64> = (0..len).map(|_| rng.random_range(0.01..2.0)).collect();
        let g = jensen_gap(&x, &a, &f).unwrap();
        assert!(g.holds(1e-12), "{g:?}");
    }
}

#[test]
fn state_independent_bound_examples() {
    assert_eq!(upper_bound_state_independent(&table(&[(0, 4)])), 1.0);
    assert!((upper_bound_state_independent(&table(&[(0, 2), (1, 2)])) - 0.5).abs() < 1e-15);
    let t = table(&[(0, 1), (1, 2), (2, 3)]);
    let direct: f64 = [1.0f64 / 6.0, 2.0 / 6.0, 3.0 / 6.0].iter().map(|f| f.powf(*f)).product();
    assert!((upper_bound_state_independent(&t) - direct).abs() < 1e-15);
}

#[test]
fn mle_stays_below_the_state_independent_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for _ in 0..10 {
        let pom = random_bases_pom(&mut rng, 3, 4);
        let truth = random_density(&mut rng, 3);
        let p = forward(&truth, &pom).unwrap().probabilities;
        let draws: Vec<OutcomeId> = (0..60)
            .map(|_| {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let i = p.iter().position(|pi| {
                    acc += pi;
                    u < acc
                });
                OutcomeId(i.unwrap_or(p.len() - 1) as u32)
            })
            .collect();
        let ft = FrequencyTable::tabulate(draws).unwrap();
        let s = estimate_mle_pure(&pom, &ft, &MleOptions::default()).unwrap();
        let l = s.log_likelihood.log_likelihood_per_datum.exp();
        assert!(l <= upper_bound_state_independent(&ft) + 1e-10);
    }
}

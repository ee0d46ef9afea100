//! Independent oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use qtomo::hilbert::{coherent_state, DensityMatrix, Ket, C64};
use qtomo::measurement::{pom_custom, pom_heterodyne_grid, Effect, EffectOperator, GridCell, OutcomeId, Pom};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn coherent(alpha: C64, dim: usize) -> Ket {
    coherent_state(alpha, dim).unwrap().value
}

/// Uniform point in the disk of the given radius.
pub fn point_in_disk(rng: &mut ChaCha8Rng, radius: f64) -> C64 {
    let r = radius * rng.random::<f64>().sqrt();
    C64::from_polar(r, 2.0 * std::f64::consts::PI * rng.random::<f64>())
}

/// Heterodyne POM whose cells sit at `points`.
pub fn pom_at_points(points: &[C64], dim: usize, area: f64) -> Pom {
    let cells: Vec<GridCell> = points.iter().map(|p| GridCell { point: *p, area }).collect();
    pom_heterodyne_grid(dim, &cells, 1e-6).unwrap()
}

pub fn random_ket(rng: &mut ChaCha8Rng, dim: usize) -> Ket {
    let v: Vec<C64> = (0..dim)
        .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    Ket::from_amplitudes(v).unwrap()
}

/// Ginibre-distributed full-rank density matrix.
pub fn random_density(rng: &mut ChaCha8Rng, dim: usize) -> DensityMatrix {
    let g = DMatrix::from_fn(dim, dim, |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let m = &g * g.adjoint();
    let t = m.trace().re;
    DensityMatrix::new(m.unscale(t)).unwrap()
}

/// Union of `bases` random orthonormal bases, each weighted `1 / bases`:
/// complete, rank-one, and informationally complete once `bases > dim`.
pub fn random_bases_pom(rng: &mut ChaCha8Rng, dim: usize, bases: usize) -> Pom {
    let mut effects = Vec::with_capacity(dim * bases);
    for _ in 0..bases {
        let g = DMatrix::from_fn(dim, dim, |_, _| {
            C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        let q = g.qr().q();
        for col in q.column_iter() {
            effects.push(Effect {
                id: OutcomeId(effects.len() as u32),
                operator: EffectOperator::Rank1 {
                    ket: Ket::from_amplitudes(col.iter().copied().collect()).unwrap(),
                    scale: 1.0,
                },
                weight: 1.0 / bases as f64,
                label: None,
            });
        }
    }
    pom_custom(dim, effects).unwrap()
}

/// Random point on the probability simplex.
pub fn random_simplex(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..len).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

/// Plain Nelder-Mead minimizer.
pub fn nelder_mead<F: Fn(&[f64]) -> f64>(
    f: &F,
    x0: &[f64],
    step: f64,
    max_evals: usize,
) -> (Vec<f64>, f64) {
    let n = x0.len();
    let mut simplex: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += step;
        simplex.push(x);
    }
    let mut values: Vec<f64> = simplex.iter().map(|x| f(x)).collect();
    let mut evals = n + 1;
    while evals < max_evals {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|a, b| values[*a].total_cmp(&values[*b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();
        if (values[n] - values[0]).abs() <= 1e-15 * (1.0 + values[0].abs()) {
            break;
        }
        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|x| x[j]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            (0..n)
                .map(|j| centroid[j] + t * (simplex[n][j] - centroid[j]))
                .collect()
        };
        let xr = along(-1.0);
        let fr = f(&xr);
        evals += 1;
        if fr < values[0] {
            let xe = along(-2.0);
            let fe = f(&xe);
            evals += 1;
            if fe < fr {
                simplex[n] = xe;
                values[n] = fe;
            } else {
                simplex[n] = xr;
                values[n] = fr;
            }
        } else if fr < values[n - 1] {
            simplex[n] = xr;
            values[n] = fr;
        } else {
            let xc = if fr < values[n] { along(-0.5) } else { along(0.5) };
            let fc = f(&xc);
            evals += 1;
            if fc < fr.min(values[n]) {
                simplex[n] = xc;
                values[n] = fc;
            } else {
                for i in 1..=n {
                    simplex[i] = (0..n)
                        .map(|j| simplex[0][j] + 0.5 * (simplex[i][j] - simplex[0][j]))
                        .collect();
                    values[i] = f(&simplex[i]);
                }
                evals += n;
            }
        }
    }
    let best = (0..=n)
        .min_by(|a, b| values[*a].total_cmp(&values[*b]))
        .unwrap();
    (simplex[best].clone(), values[best])
}

/// Best per-datum log-likelihood `sum_i f_i ln |<y_i|psi>|^2` over normalized
/// `psi = sum_k V_k |y_k>`, by random-restart direct search on `V`.
pub fn brute_force_pure_loglik(kets: &[Ket], f: &[f64], rng: &mut ChaCha8Rng, restarts: usize) -> f64 {
    let n = kets.len();
    let gram = DMatrix::from_fn(n, n, |k, i| kets[k].inner(&kets[i]).unwrap());
    let objective = |x: &[f64]| -> f64 {
        let v = DVector::from_fn(n, |i, _| C64::new(x[i], x[i + n]));
        let cv = &gram * &v;
        let norm = v.dotc(&cv).re;
        if !(norm > 0.0) {
            return f64::INFINITY;
        }
        let mut total = 0.0;
        for k in 0..n {
            let u = cv[k].norm_sqr() / norm;
            if u <= 0.0 {
                return f64::INFINITY;
            }
            total += f[k] * u.ln();
        }
        -total
    };
    let mut best = (Vec::new(), f64::INFINITY);
    for _ in 0..restarts {
        let x0: Vec<f64> = (0..2 * n).map(|_| rng.sample(StandardNormal)).collect();
        let r = nelder_mead(&objective, &x0, 0.5, 4000);
        if r.1 < best.1 {
            best = r;
        }
    }
    // restart the simplex around the incumbent until it stops improving
    let mut step = 0.1;
    for _ in 0..30 {
        let r = nelder_mead(&objective, &best.0, step, 4000);
        let gain = best.1 - r.1;
        if r.1 < best.1 {
            best = r;
        }
        if gain < 1e-15 {
            step *= 0.3;
            if step < 1e-9 {
                break;
            }
        }
    }
    -best.1
}

/// Normalized Hermite function `psi_n(x)` by the three-term recurrence.
pub fn hermite_function(n: usize, x: f64) -> f64 {
    let mut prev = std::f64::consts::PI.powf(-0.25) * (-x * x / 2.0).exp();
    if n == 0 {
        return prev;
    }
    let mut cur = std::f64::consts::SQRT_2 * x * prev;
    for k in 1..n {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * x * cur - (kf / (kf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Roots of `H_n` located by sign changes of `psi_n` and refined by bisection.
pub fn hermite_roots(n: usize) -> Vec<f64> {
    let limit = (2.0 * n as f64 + 1.0).sqrt() + 1.0;
    let steps = 200 * n;
    let h = 2.0 * limit / steps as f64;
    let mut roots = Vec::new();
    for s in 0..steps {
        let (mut lo, mut hi) = (-limit + s as f64 * h, -limit + (s + 1) as f64 * h);
        let (flo, fhi) = (hermite_function(n, lo), hermite_function(n, hi));
        if flo == 0.0 {
            roots.push(lo);
            continue;
        }
        if flo * fhi > 0.0 {
            continue;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if hermite_function(n, mid) * hermite_function(n, lo) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        roots.push(0.5 * (lo + hi));
    }
    roots
}

mod common;

use aqlrmf::em::{self, kappa_root, FitOptions};
use aqlrmf::synth::{derive_seed, make_instance};
use aqlrmf::wl1::{
    check_point, solve_wl1, update_u_entry, update_v_entry, weighted_median, wl1_objective, Kink, WeightMatrix,
    Wl1Options,
};
use aqlrmf::{metrics, seeded_rng, FactorPair, MaskedMatrix};
use ndarray::Array2;
use rand::Rng;

struct Problem {
    x: MaskedMatrix,
    w: WeightMatrix,
    f: FactorPair,
}

fn problem(seed: u64, m: usize, n: usize, r: usize) -> Problem {
    let mut rng = seeded_rng(seed);
    let values = Array2::from_shape_fn((m, n), |_| rng.random_range(-4.0..4.0));
    let mut mask = Array2::from_shape_fn((m, n), |_| rng.random_bool(0.75));
    mask[[0, 0]] = true;
    let x = MaskedMatrix::new(values, mask).unwrap();
    let w = Array2::from_shape_fn((m, n), |(i, j)| {
        if x.is_observed(i, j) {
            rng.random_range(0.1..2.0)
        } else {
            0.0
        }
    });
    let w = WeightMatrix::new(w, &x).unwrap();
    let u = Array2::from_shape_fn((m, r), |_| rng.random_range(-1.5..1.5));
    let v = Array2::from_shape_fn((n, r), |_| rng.random_range(-1.5..1.5));
    Problem {
        x,
        w,
        f: FactorPair::new(u, v).unwrap(),
    }
}

fn partial_residual(p: &Problem, row: usize, col: usize, skip: usize) -> f64 {
    let mut e = p.x.values()[[row, col]];
    for k in (0..p.f.rank()).filter(|&k| k != skip) {
        e -= p.f.u[[row, k]] * p.f.v[[col, k]];
    }
    e
}

#[test]
fn v_entry_update_is_the_exact_scalar_minimizer() {
    for seed in 0..200 {
        let p = problem(seed, 9, 6, 3);
        let (j, i) = (seed as usize % 6, seed as usize % 3);
        let m = p.x.nrows();
        let e: Vec<f64> = (0..m).map(|l| partial_residual(&p, l, j, i)).collect();
        let d: Vec<f64> = (0..m).map(|l| p.f.u[[l, i]]).collect();
        let c: Vec<f64> = (0..m).map(|l| p.w.as_array()[[l, j]]).collect();
        let got = update_v_entry(j, i, &p.x, &p.w, &p.f);
        let cost = |t: f64| -> f64 { (0..m).map(|l| c[l] * (e[l] - d[l] * t).abs()).sum() };
        match common::scan_breakpoints(&e, &d, &c) {
            Some((_, best)) => assert!(cost(got) <= best * (1.0 + 1e-12) + 1e-12, "seed {seed}"),
            None => assert_eq!(got, p.f.v[[j, i]]),
        }
    }
}

#[test]
fn u_entry_update_is_the_exact_scalar_minimizer() {
    for seed in 0..200 {
        let p = problem(1000 + seed, 7, 8, 2);
        let (j, i) = (seed as usize % 7, seed as usize % 2);
        let n = p.x.ncols();
        let e: Vec<f64> = (0..n).map(|l| partial_residual(&p, j, l, i)).collect();
        let d: Vec<f64> = (0..n).map(|l| p.f.v[[l, i]]).collect();
        let c: Vec<f64> = (0..n).map(|l| p.w.as_array()[[j, l]]).collect();
        let got = update_u_entry(j, i, &p.x, &p.w, &p.f);
        let cost = |t: f64| -> f64 { (0..n).map(|l| c[l] * (e[l] - d[l] * t).abs()).sum() };
        match common::scan_breakpoints(&e, &d, &c) {
            Some((_, best)) => assert!(cost(got) <= best * (1.0 + 1e-12) + 1e-12, "seed {seed}"),
            None => assert_eq!(got, p.f.u[[j, i]]),
        }
    }
}

#[test]
fn check_point_minimizes_asymmetric_kinks() {
    let mut rng = seeded_rng(77);
    for _ in 0..500 {
        let len = rng.random_range(1..10);
        let mut kinks: Vec<Kink> = (0..len)
            .map(|_| Kink {
                at: rng.random_range(-5.0..5.0),
                left: rng.random_range(0.0..2.0),
                right: rng.random_range(0.0..2.0),
            })
            .collect();
        let cost = |ks: &[Kink], v: f64| -> f64 {
            ks.iter()
                .map(|k| {
                    if v < k.at {
                        k.left * (k.at - v)
                    } else {
                        k.right * (v - k.at)
                    }
                })
                .sum()
        };
        let best = kinks.iter().map(|k| cost(&kinks, k.at)).fold(f64::INFINITY, f64::min);
        let got = check_point(&mut kinks).unwrap();
        assert!(cost(&kinks, got) <= best * (1.0 + 1e-12) + 1e-12);
    }
}

#[test]
fn weighted_median_handles_ties_and_zero_weights() {
    assert_eq!(weighted_median(&[1.0, 2.0], &[1.0, 1.0]).unwrap(), 1.0);
    assert_eq!(weighted_median(&[5.0, -1.0, 3.0], &[0.0, 1.0, 3.0]).unwrap(), 3.0);
    assert!(weighted_median(&[1.0], &[0.0]).is_err());
    assert!(weighted_median(&[1.0, 2.0], &[1.0]).is_err());
}

#[test]
fn kappa_root_is_the_quadratic_root_in_unit_interval() {
    let mut rng = seeded_rng(5);
    for _ in 0..5000 {
        let n_s: f64 = rng.random_range(1e-3..1e3);
        let eta: f64 = rng.random_range(-10.0 * n_s..10.0 * n_s);
        if eta.abs() < 1e-9 {
            continue;
        }
        let roots = common::quadratic_roots(eta, -(2.0 * n_s + eta), n_s);
        let inside: Vec<f64> = roots.into_iter().filter(|r| *r > 0.0 && *r < 1.0).collect();
        assert_eq!(inside.len(), 1, "n {n_s} eta {eta}");
        let got = kappa_root(n_s, eta, 1e-12);
        assert!((got - inside[0]).abs() <= 1e-12, "{got} vs {}", inside[0]);
        assert_eq!(eta > 0.0, got < 0.5);
    }
    assert_eq!(kappa_root(3.0, 0.0, 1e-12), 0.5);
}

#[test]
fn cyclic_descent_never_raises_the_objective() {
    for seed in 0..50 {
        let p = problem(5000 + seed, 12, 9, 3);
        let before = wl1_objective(&p.x, &p.w, &p.f);
        let after = solve_wl1(&p.x, &p.w, p.f.clone(), &Wl1Options::default());
        assert!(wl1_objective(&p.x, &p.w, &after) <= before);
    }
}

#[test]
fn uniform_l1_recovers_a_clean_rank_one_matrix() {
    for rep in 0..5 {
        let inst = make_instance(30, 15, 1, 0.2, None, derive_seed(99, 2 * rep)).unwrap();
        let opts = FitOptions::new(1);
        let (f, _) = em::fit_cwm_uniform(&inst.observed, &opts, derive_seed(99, 2 * rep + 1)).unwrap();
        assert!(metrics::l1_error(&inst.ground_truth, &f).unwrap() < 1e-8);
    }
}

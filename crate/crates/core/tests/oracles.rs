//! Cross-module checks against independent computations.

use steady_ga::absorption::{analyze, assemble_system};
use steady_ga::bounds::{optimize_c, summed_level_constant, xi_star, EvalMode};
use steady_ga::chain::{build_chain, ChainSpec};
use steady_ga::experiment::{estimate_drift, mc_chain_absorption, DriftConfig};
use steady_ga::{BitVector, FlipProbabilities, GaConfig, MutationSpec};

/// Dense Gauss-Jordan inverse, independent of the tridiagonal solver.
fn dense_inverse(mut a: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let m = a.len();
    let mut inv: Vec<Vec<f64>> = (0..m)
        .map(|i| (0..m).map(|k| f64::from(u8::from(i == k))).collect())
        .collect();
    for col in 0..m {
        let piv = (col..m)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .unwrap();
        a.swap(col, piv);
        inv.swap(col, piv);
        let d = a[col][col];
        for k in 0..m {
            a[col][k] /= d;
            inv[col][k] /= d;
        }
        for r in 0..m {
            if r != col {
                let f = a[r][col];
                for k in 0..m {
                    a[r][k] -= f * a[col][k];
                    inv[r][k] -= f * inv[col][k];
                }
            }
        }
    }
    inv
}

#[test]
fn fundamental_matrix_matches_dense_inverse() {
    for (mu, j, c) in [(9, 300, 1.0), (20, 10, 0.5), (33, 999, 2.0)] {
        let t = build_chain(&ChainSpec::with_rate(mu, j, 1000, c).unwrap()).unwrap();
        let m = t.m();
        let i_minus_q: Vec<Vec<f64>> = (0..m)
            .map(|i| {
                (0..m)
                    .map(|k| f64::from(u8::from(i == k)) - t.p(i, k))
                    .collect()
            })
            .collect();
        let dense = dense_inverse(i_minus_q);
        let tri = assemble_system(&t).inverse().unwrap();
        let res = analyze(&t).unwrap();
        for i in 0..m {
            for k in 0..m {
                assert!((dense[i][k] - tri[i][k]).abs() <= 1e-9 * dense[i][k].abs().max(1.0));
            }
            let row: f64 = dense[i].iter().sum();
            assert!((row - res.expected_times[i]).abs() <= 1e-9 * row);
        }
        assert!((dense[0][0] - res.n11).abs() <= 1e-10 * res.n11);
    }
}

#[test]
fn monte_carlo_agrees_across_a_small_sweep() {
    for mu in [3, 6, 11] {
        for j in [1, 50, 99] {
            let spec = ChainSpec::with_rate(mu, j, 100, 1.0).unwrap();
            let exact = analyze(&build_chain(&spec).unwrap())
                .unwrap()
                .expected_times;
            let last = exact.len() - 1;
            for start in [0, last] {
                let e = mc_chain_absorption(&spec, start, 20_000, 17).unwrap();
                assert!(
                    e.agrees_with(exact[start], 0.0, 4.0),
                    "{mu} {j} {start}: {e:?} vs {}",
                    exact[start]
                );
            }
        }
    }
}

#[test]
fn summed_levels_approach_the_constant() {
    let c = optimize_c(5, EvalMode::AllEvals).unwrap();
    let probs = FlipProbabilities::from_rate(c.c_star);
    let excess = |n: usize| summed_level_constant(5, probs, n).unwrap() / c.gamma_star - 1.0;
    let (a, b) = (excess(1_000), excess(20_000));
    assert!(a > b && b > 0.0, "{a} {b}");
    // excess decays like 1 / ln n
    let ratio = a * (1000f64).ln() / (b * (20_000f64).ln());
    assert!((ratio - 1.0).abs() < 0.1, "{ratio}");
}

#[test]
fn xi_star_is_below_one_half() {
    for mu in 3..=80 {
        let x = xi_star(mu).unwrap();
        assert!(x > 0.0 && x < 0.5, "{mu}: {x}");
    }
}

#[test]
fn ga_runtime_is_order_n_log_n() {
    let n = 200;
    let z = BitVector::ones(n);
    let runs: Vec<u64> = (0..10)
        .map(|s| {
            let cfg = GaConfig::new(n, 5, MutationSpec::standard(1.0), s).with_trace(None);
            steady_ga::ga_run(&cfg, &z).unwrap().evaluations_count_all
        })
        .collect();
    let mean = runs.iter().sum::<u64>() as f64 / runs.len() as f64;
    let scale = n as f64 * (n as f64).ln();
    assert!(
        mean / scale > 0.5 && mean / scale < std::f64::consts::E,
        "{}",
        mean / scale
    );
}

#[test]
fn drift_is_positive_in_every_state() {
    let cells = estimate_drift(&DriftConfig {
        n: 200,
        mu: 7,
        j: 100,
        mutation: MutationSpec::standard(1.0),
        samples_per_state: 4_000,
        min_samples: 1_000,
        seed: 3,
    })
    .unwrap();
    assert_eq!(cells.len(), 4);
    for c in &cells {
        let d = c.drift.unwrap();
        assert!(d.mean > 0.0, "{c:?}");
    }
}

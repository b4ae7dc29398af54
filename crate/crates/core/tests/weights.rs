use chebfit::linalg::Mat;
use chebfit::measures::{density, MeasureSpec};
use chebfit::orthopoly::BasisKind;
use chebfit::weights::{
    lewis_ratio_p1, matrix_leverage, matrix_lewis_weights, matrix_sensitivity, operator_reweighted_leverage,
    operator_sensitivity, DesignMatrix,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn random_matrix(seed: u64, n: usize, k: usize) -> Mat<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // heavy-ish row scaling so the weights are far from uniform
    Mat::from_fn(n, k, |i, _| {
        let s = 1.0 + 4.0 * ((i * 37 % 11) as f64 / 10.0).powi(3);
        s * rng.sample::<f64, _>(StandardNormal)
    })
}

/// Leverage scores from the Gram inverse, independent of the QR route.
fn leverage_by_normal_equations(a: &Mat<f64>) -> Vec<f64> {
    let k = a.cols();
    let mut g = vec![vec![0.0; k]; k];
    for i in 0..a.rows() {
        for r in 0..k {
            for c in 0..k {
                g[r][c] += a[(i, r)] * a[(i, c)];
            }
        }
    }
    // Gauss–Jordan inverse
    let mut inv: Vec<Vec<f64>> = (0..k).map(|r| (0..k).map(|c| if r == c { 1.0 } else { 0.0 }).collect()).collect();
    for col in 0..k {
        let piv = (col..k).max_by(|&x, &y| g[x][col].abs().total_cmp(&g[y][col].abs())).unwrap();
        g.swap(col, piv);
        inv.swap(col, piv);
        let d = g[col][col];
        for c in 0..k {
            g[col][c] /= d;
            inv[col][c] /= d;
        }
        for r in 0..k {
            if r != col {
                let f = g[r][col];
                for c in 0..k {
                    g[r][c] -= f * g[col][c];
                    inv[r][c] -= f * inv[col][c];
                }
            }
        }
    }
    (0..a.rows())
        .map(|i| {
            let row = a.row(i);
            (0..k).map(|r| (0..k).map(|c| row[r] * inv[r][c] * row[c]).sum::<f64>()).sum()
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn lewis_weights_are_a_fixed_point(seed in 0u64..100_000, n in 12usize..200, k in 1usize..10, pi in 0usize..4) {
        let p = [2.0 / 3.0, 1.0, 1.5, 2.0][pi];
        let a = random_matrix(seed, n, k);
        let w = matrix_lewis_weights(&a, p, 1e-10, 500).unwrap();
        prop_assert!(w.converged && w.fixpoint_residual <= 1e-10);
        prop_assert!((w.sum() - k as f64).abs() < 1e-6);
        prop_assert!(w.values.iter().all(|&v| (0.0..=1.0 + 1e-12).contains(&v)));
        // literal defining equation: τ(W^{1/2−1/p} A) = w
        let scale: Vec<f64> = w.values.iter().map(|v| v.powf(0.5 - 1.0 / p)).collect();
        let tau = leverage_by_normal_equations(&a.scale_rows(&scale));
        for (t, v) in tau.iter().zip(&w.values) {
            prop_assert!((t - v).abs() <= 1e-8 * v);
        }
    }

    #[test]
    fn leverage_matches_normal_equations(seed in 0u64..100_000, n in 5usize..60, k in 1usize..5) {
        let a = random_matrix(seed, n, k);
        let lev = matrix_leverage(&a).unwrap();
        for (x, y) in lev.values.iter().zip(leverage_by_normal_equations(&a)) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn sensitivities_are_below_lewis_weights(seed in 0u64..100_000, pi in 0usize..3) {
        let p = [1.0, 1.5, 2.0][pi];
        let a = random_matrix(seed, 15, 3);
        let w = matrix_lewis_weights(&a, p, 1e-10, 500).unwrap();
        for i in 0..a.rows() {
            let s = matrix_sensitivity(&a, i, p).unwrap();
            prop_assert!(s <= w.values[i] + 1e-6, "row {i}: {s} > {}", w.values[i]);
        }
    }
}

#[test]
fn p2_lewis_collapses_to_leverage() {
    for seed in 0..100 {
        let a = random_matrix(seed, 20 + (seed as usize * 7) % 150, 1 + seed as usize % 9);
        let lev = matrix_leverage(&a).unwrap();
        let lew = matrix_lewis_weights(&a, 2.0, 1e-10, 500).unwrap();
        for (x, y) in lev.values.iter().zip(&lew.values) {
            assert!((x - y).abs() <= 1e-10 * y);
        }
    }
}

#[test]
fn sensitivity_p1_two_equal_rows() {
    let a = Mat::from_rows(&[vec![1.0], vec![1.0]]);
    // scalar enumeration of max |x|/(|x|+|x|)
    let brute = (1..100).map(|k| k as f64 / 10.0).map(|x| x / (2.0 * x)).fold(0.0, f64::max);
    assert!((matrix_sensitivity(&a, 1, 1.0).unwrap() - brute).abs() < 1e-12);
}

#[test]
fn lewis_ratio_respects_chebyshev_u_bound() {
    for d in [1usize, 4, 9] {
        for k in 1..200 {
            let t = -1.0 + 2.0 * k as f64 / 200.0;
            let r = lewis_ratio_p1(t, d).unwrap();
            let slack = (1.0 / (1.0 - t * t).sqrt() + 1.0) / (2.0 * (d + 1) as f64);
            assert!(r >= 1.0 - slack - 1e-12 && r <= 1.0 + slack + 1e-12);
        }
    }
}

#[test]
fn unclipped_p1_ratio_decays_at_the_ends() {
    let spec = MeasureSpec::chebyshev(6);
    let ratios: Vec<f64> = (2..=8)
        .map(|k| {
            let t = 1.0 - 10f64.powi(-k);
            operator_reweighted_leverage(t, 6, 1.0, &spec).unwrap() / density(&spec, t).unwrap()
        })
        .collect();
    assert!(ratios.windows(2).all(|w| w[1] < w[0]), "{ratios:?}");
    assert!(ratios[4] < 0.1);
}

/// Lewis weights of the Vandermonde matrix on many uniform points track the
/// Chebyshev density: `w_i ≤ (c / n₀) v(s_i)` with a modest `c`.
#[test]
fn matrix_lewis_weights_track_chebyshev_density() {
    let n0 = 2000;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let pts: Vec<f64> = (0..n0).map(|_| rng.random_range(-1.0..1.0)).collect();
    for d in [2usize, 5, 8] {
        let design = DesignMatrix::from_points(&pts, d, BasisKind::ChebyshevT).unwrap();
        let spec = MeasureSpec::chebyshev(d);
        for q in [2.0 / 3.0, 1.0, 2.0] {
            let w = matrix_lewis_weights(&design.matrix, q, 1e-10, 500).unwrap();
            let c = pts
                .iter()
                .zip(&w.values)
                .map(|(&s, &wi)| wi * n0 as f64 / density(&spec, s).unwrap())
                .fold(0.0, f64::max);
            let polylog = (d as f64 + 1.0).ln().powi(3).max(1.0);
            assert!(c.is_finite() && c <= 4.0 * polylog, "d={d} q={q}: c={c}");
        }
    }
}

#[test]
fn operator_sensitivity_respects_global_bound() {
    for d in [2usize, 4] {
        for p in [1.0, 3.0] {
            for &t in &[-0.999, -0.5, 0.0, 0.9, 0.9999] {
                let s = operator_sensitivity(t, d, p, 2048).unwrap();
                assert!(s <= 1.05 * (d * d) as f64 * (p + 1.0) && s >= 0.5 - 1e-6, "d={d} p={p} t={t}: {s}");
            }
        }
    }
}

use chebfit::active::{
    fit_constant_factor, fit_constant_factor_binomial, fit_linf, fit_relative_error, full_objective, inclusion_probability,
    lp_norm, matrix_fit_relative, subsample_rows, subsampled_objective_pow, FunctionOracle, Oracle,
};
use chebfit::linalg::Qr;
use chebfit::lpsolve::{solve, solve_linf, RegressionProblem, SolveOptions};
use chebfit::orthopoly::{BasisKind, PolyCoeffs};
use chebfit::quadrature::composite_gauss_legendre;
use chebfit::weights::DesignMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// `min_q ‖f − q‖_p` over degree-`d` polynomials, by a weighted regression on
/// a fine composite Gauss–Legendre rule.
fn dense_opt(f: &dyn Oracle<f64>, d: usize, p: f64) -> f64 {
    let rule = composite_gauss_legendre::<f64>(256, 16, &f.breakpoints());
    let design = DesignMatrix::from_points(&rule.nodes, d, BasisKind::ChebyshevT).unwrap();
    let b: Vec<f64> = rule.nodes.iter().map(|&t| f.eval(t)).collect();
    let w: Vec<f64> = rule.weights.iter().map(|w| w.powf(1.0 / p)).collect();
    let pb = RegressionProblem::new(design.matrix, b, w, p).unwrap();
    solve(&pb, &SolveOptions::default()).unwrap().objective
}

#[test]
fn abs_fit_is_near_optimal() {
    let opt = (1.0f64 / 6.0).sqrt();
    assert!((dense_opt(&FunctionOracle::abs(), 1, 2.0) - opt).abs() < 1e-9);
    let ok = (0..10)
        .filter(|&s| {
            let f = FunctionOracle::<f64>::abs();
            fit_relative_error(&f, 1, 2.0, 400, s).unwrap().est_error <= 1.15 * opt
        })
        .count();
    assert!(ok >= 9, "{ok}/10");
}

#[test]
fn exp_relative_error_fit() {
    let opt = dense_opt(&FunctionOracle::exp(), 4, 2.0);
    let f = FunctionOracle::<f64>::exp();
    let rep = fit_relative_error(&f, 4, 2.0, 1000, 3).unwrap();
    assert!(rep.est_error <= 1.05 * opt, "{} vs {opt}", rep.est_error);
    assert_eq!(rep.n_queries, 1000);
}

#[test]
fn polynomials_are_recovered_for_every_p() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for d in [0usize, 3, 10] {
        let coeffs: Vec<f64> = (0..=d).map(|_| rng.sample(StandardNormal)).collect();
        let q = PolyCoeffs::new(BasisKind::ChebyshevT, coeffs).unwrap();
        for p in [1.0, 1.5, 2.0, 3.0] {
            let f = FunctionOracle::poly(q.clone());
            let norm = lp_norm(&f, p).unwrap();
            let rep = fit_constant_factor(&f, d, p, 4 * (d + 1), 1).unwrap();
            assert!(rep.est_error <= 1e-6 * norm, "d={d} p={p}: {}", rep.est_error);
        }
        let f = FunctionOracle::poly(q.clone());
        let rep = fit_linf(&f, d, 4 * (d + 1), 1, None).unwrap();
        assert!(rep.est_error <= 1e-6 * lp_norm(&f, f64::INFINITY).unwrap());
    }
}

#[test]
fn unseen_spike_gives_the_zero_fit() {
    let zero = FunctionOracle::poly(PolyCoeffs::zero(3, BasisKind::ChebyshevT));
    let base = fit_constant_factor(&zero, 3, 1.5, 30, 8).unwrap();
    let pts = &base.samples[0].points;
    // a spike in a gap between sorted sample points
    let mut sorted = pts.clone();
    sorted.sort_by(f64::total_cmp);
    let (lo, hi) = sorted
        .windows(2)
        .map(|w| (w[0], w[1]))
        .max_by(|a, b| (a.1 - a.0).total_cmp(&(b.1 - b.0)))
        .unwrap();
    let spike = FunctionOracle::spike(0.5 * (lo + hi), 0.25 * (hi - lo), 7.0).unwrap();
    let rep = fit_constant_factor(&spike, 3, 1.5, 30, 8).unwrap();
    assert_eq!(rep.poly, base.poly);
}

#[test]
fn tabulated_oracle_fits_its_interpolant() {
    let pts: Vec<f64> = (0..=40).map(|k| -1.0 + k as f64 / 20.0).collect();
    let vals: Vec<f64> = pts.iter().map(|t| 2.0 * t - 1.0).collect();
    let f = FunctionOracle::tabulated(pts, vals).unwrap();
    let rep = fit_constant_factor(&f, 1, 2.0, 20, 2).unwrap();
    assert!(rep.est_error < 1e-10);
    let m = rep.poly_monomial.unwrap();
    assert!((m.coeffs[0] + 1.0).abs() < 1e-10 && (m.coeffs[1] - 2.0).abs() < 1e-10);
}

#[test]
fn linf_fit_is_within_four_times_minimax() {
    let grid: Vec<f64> = (0..10_000).map(|k| -1.0 + 2.0 * k as f64 / 9_999.0).collect();
    let design = DesignMatrix::from_points(&grid, 3, BasisKind::ChebyshevT).unwrap();
    let b: Vec<f64> = grid.iter().map(|t| t.exp()).collect();
    let minimax = solve_linf(&design.matrix, &b, &vec![1.0; grid.len()], &SolveOptions::linf_default())
        .unwrap()
        .objective;
    // the degree-3 minimax error of exp is about 5.5e-3
    assert!((minimax - 5.53e-3).abs() < 1e-4, "{minimax}");
    for seed in 0..5 {
        let f = FunctionOracle::<f64>::exp();
        let rep = fit_linf(&f, 3, 200, seed, None).unwrap();
        assert!(rep.est_error <= 4.0 * minimax, "seed {seed}: {}", rep.est_error);
        assert_eq!(rep.n_queries, 200);
    }
}

#[test]
fn binomial_path_draws_a_random_count() {
    let counts: Vec<usize> = (0..20)
        .map(|s| {
            let f = FunctionOracle::<f64>::runge();
            fit_constant_factor_binomial(&f, 4, 2.0, 2000, 100, s).unwrap().n_queries
        })
        .collect();
    let q = chebfit::measures::two_stage_acceptance_mass(2000, 100);
    let mean = counts.iter().sum::<usize>() as f64 / 20.0;
    assert!((mean - 2000.0 * q).abs() < 4.0 * (2000.0 * q).sqrt(), "{mean} vs {}", 2000.0 * q);
    assert!(counts.iter().any(|&c| c != counts[0]));
}

fn uniform_design(n0: usize, d: usize, seed: u64) -> DesignMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts: Vec<f64> = (0..n0).map(|_| rng.random_range(-1.0..1.0)).collect();
    DesignMatrix::from_points(&pts, d, BasisKind::ChebyshevT).unwrap()
}

#[test]
fn kept_count_matches_poisson_binomial_mean() {
    let design = uniform_design(1000, 3, 1);
    let probs: Vec<f64> = design
        .row_points
        .as_ref()
        .unwrap()
        .iter()
        .map(|&s| inclusion_probability(s, 40, 1000))
        .collect();
    let mean: f64 = probs.iter().sum();
    let sd = probs.iter().map(|p| p * (1.0 - p)).sum::<f64>().sqrt();
    let avg = (0..400).map(|s| subsample_rows(&design, 40, 2.0, s).unwrap().len() as f64).sum::<f64>() / 400.0;
    assert!((avg - mean).abs() <= 3.0 * sd / 20.0, "{avg} vs {mean}");
}

#[test]
fn subsampled_norm_is_unbiased() {
    let design = uniform_design(300, 4, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let b: Vec<f64> = (0..300).map(|_| rng.sample(StandardNormal)).collect();
    let x0 = [0.1, -0.4, 0.3, 0.0, 0.2];
    for p in [1.0, 3.0] {
        let full = full_objective(&design, &b, &x0, p).powf(p);
        let draws: Vec<f64> = (0..2000)
            .map(|s| subsampled_objective_pow(&design, &b, &x0, &subsample_rows(&design, 30, p, s).unwrap(), p))
            .collect();
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        let var = draws.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (draws.len() - 1) as f64;
        let se = (var / draws.len() as f64).sqrt();
        assert!((mean - full).abs() <= 3.0 * se, "p={p}: {mean} vs {full} (se {se})");
    }
}

#[test]
fn subsampling_is_a_subspace_embedding() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for d in [2usize, 6] {
        let design = uniform_design(4000, d, 10 + d as u64);
        let m = (40.0 * (d + 1) as f64 * ((d + 2) as f64).ln()).ceil() as usize;
        for p in [2.0, 3.0] {
            let zero = vec![0.0; design.rows()];
            let mut good = 0;
            for trial in 0..200u64 {
                let x: Vec<f64> = (0..=d).map(|_| rng.sample(StandardNormal)).collect();
                let s = subsample_rows(&design, m, p, 1000 + trial).unwrap();
                let sub = subsampled_objective_pow(&design, &zero, &x, &s, p);
                let full = full_objective(&design, &zero, &x, p).powf(p);
                if sub >= 0.5 * full && sub <= 2.0 * full {
                    good += 1;
                }
            }
            assert!(good >= 190, "d={d} p={p}: {good}/200");
        }
    }
}

#[test]
fn matrix_relative_fit_is_near_optimal() {
    let d = 4;
    let design = uniform_design(2000, d, 6);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let x_star: Vec<f64> = (0..=d).map(|_| rng.sample(StandardNormal)).collect();
    let b: Vec<f64> = design
        .matrix
        .mul_vec(&x_star)
        .into_iter()
        .map(|v| v + 0.3 * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let best = {
        let x = Qr::new(&design.matrix).solve_lsq(&b).unwrap();
        full_objective(&design, &b, &x, 2.0)
    };
    let m = (8.0 * (d + 1) as f64 * ((d + 2) as f64).ln()).ceil() as usize;
    let ok = (0..20)
        .filter(|&s| {
            let fit = matrix_fit_relative(&design, &b, 2.0, m, s).unwrap();
            full_objective(&design, &b, &fit.x, 2.0) <= 1.1 * best
        })
        .count();
    assert!(ok >= 18, "{ok}/20");
}

#[test]
fn capped_subsample_reduces_to_the_full_problem() {
    // points so close to ±1 that every probability caps at 1
    let pts: Vec<f64> = (0..40).map(|k| if k % 2 == 0 { 1.0 - 1e-9 } else { -1.0 + 1e-9 } * (1.0 - k as f64 * 1e-10)).collect();
    let design = DesignMatrix::from_points(&pts, 1, BasisKind::ChebyshevT).unwrap();
    let b: Vec<f64> = (0..40).map(|k| (k as f64).sin()).collect();
    let fit = matrix_fit_relative(&design, &b, 1.5, 40, 1).unwrap();
    let full = solve(
        &RegressionProblem::unweighted(design.matrix.clone(), b.clone(), 1.5).unwrap(),
        &SolveOptions::default(),
    )
    .unwrap();
    assert_eq!(fit.samples[0].len(), 40);
    let got = full_objective(&design, &b, &fit.x, 1.5);
    assert!((got - full.objective).abs() < 1e-8 * full.objective);
}

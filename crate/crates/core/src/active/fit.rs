//! Active polynomial fitting from Chebyshev-distributed queries.

use serde::{Deserialize, Serialize};

use super::oracle::{lp_error, Oracle, Residual};
use crate::error::{Error, Result};
use crate::linalg::Qr;
use crate::lpsolve::{solve, solve_linf, RegressionProblem, SolveOptions, SolveResult};
use crate::measures::{sample, sample_count_two_stage, MeasureSpec, SampleSet};
use crate::orthopoly::{convert_basis, BasisKind, PolyCoeffs, MAX_MONOMIAL_DEGREE};
use crate::scalar::Scalar;
use crate::weights::DesignMatrix;

/// Outcome of one fitting run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport<T> {
    /// The fitted polynomial in the Chebyshev-T basis.
    pub poly: PolyCoeffs<T>,
    /// The same polynomial in the monomial basis, when `d ≤ 64`.
    pub poly_monomial: Option<PolyCoeffs<T>>,
    pub stage_results: Vec<SolveResult<T>>,
    /// Query points per stage; `rescales` holds the regression row weights.
    pub samples: Vec<SampleSet<T>>,
    pub n_queries: usize,
    pub p: T,
    /// `‖q̂ − f‖_p` (sup-norm for `p = ∞`).
    pub est_error: T,
    pub seed: u64,
}

impl<T: Scalar> FitReport<T> {
    pub fn converged(&self) -> bool {
        self.stage_results.iter().all(|r| r.converged)
    }
}

fn monomial_form<T: Scalar>(poly: &PolyCoeffs<T>) -> Result<Option<PolyCoeffs<T>>> {
    if poly.degree() > MAX_MONOMIAL_DEGREE {
        return Ok(None);
    }
    convert_basis(poly, BasisKind::Monomial).map(Some)
}

/// One weighted regression stage: draws Chebyshev points (retrying once
/// with `seed + 1` if the design is rank deficient, before any query is
/// spent), queries the oracle and solves.
fn chebyshev_stage<T: Scalar>(
    oracle: &dyn Oracle<T>,
    d: usize,
    n: usize,
    seed: u64,
    row_weight: impl Fn(T) -> T,
    solver: impl Fn(&DesignMatrix<T>, &[T], &[T]) -> Result<SolveResult<T>>,
) -> Result<(PolyCoeffs<T>, SolveResult<T>, SampleSet<T>)> {
    let spec = MeasureSpec::chebyshev(d);
    let mut last_err = None;
    for s in [seed, seed.wrapping_add(1)] {
        let mut set = sample(&spec, n, s)?;
        let design = DesignMatrix::from_points(&set.points, d, BasisKind::ChebyshevT)?;
        let weights: Vec<T> = set.points.iter().map(|&t| row_weight(t)).collect();
        if let Err(e) = Qr::new(&design.matrix.scale_rows(&weights)).require_full_rank() {
            last_err = Some(e);
            continue;
        }
        let values: Vec<T> = set.points.iter().map(|&t| oracle.query(t)).collect();
        let res = solver(&design, &values, &weights)?;
        let poly = PolyCoeffs::new(BasisKind::ChebyshevT, res.x.clone())?;
        set.values = values;
        set.rescales = weights;
        return Ok((poly, res, set));
    }
    Err(last_err.expect("at least one attempt"))
}

fn check_finite_p<T: Scalar>(p: T) -> Result<()> {
    if p >= T::one() && p.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter(format!("p must be finite and at least 1, got {p}")))
    }
}

fn constant_factor_stage<T: Scalar>(
    oracle: &dyn Oracle<T>,
    d: usize,
    p: T,
    n: usize,
    seed: u64,
) -> Result<(PolyCoeffs<T>, SolveResult<T>, SampleSet<T>)> {
    chebyshev_stage(
        oracle,
        d,
        n,
        seed,
        |t| (T::one() - t * t).sqrt().powf(T::one() / p),
        |design, b, s| {
            let problem = RegressionProblem::new(design.matrix.clone(), b.to_vec(), s.to_vec(), p)?;
            solve(&problem, &SolveOptions::default())
        },
    )
}

/// Constant-factor ℓ_p fit from `n` Chebyshev-distributed queries, with rows
/// weighted by `(1 − t_i²)^{1/(2p)}`.
pub fn fit_constant_factor<T: Scalar>(oracle: &dyn Oracle<T>, d: usize, p: T, n: usize, seed: u64) -> Result<FitReport<T>> {
    check_finite_p(p)?;
    if n < d + 1 {
        return Err(Error::Parameter(format!("need n >= d + 1 = {}, got {n}", d + 1)));
    }
    let before = oracle.query_count();
    let (poly, res, set) = constant_factor_stage(oracle, d, p, n, seed)?;
    Ok(FitReport {
        poly_monomial: monomial_form(&poly)?,
        est_error: lp_error(oracle, Some(&poly), p)?,
        poly,
        stage_results: vec![res],
        samples: vec![set],
        n_queries: oracle.query_count() - before,
        p,
        seed,
    })
}

/// [`fit_constant_factor`] with the sample count drawn as
/// `n ~ Binomial(n₀, q)`, the law of the uniform-then-thinned scheme with
/// target `m`.
pub fn fit_constant_factor_binomial<T: Scalar>(
    oracle: &dyn Oracle<T>,
    d: usize,
    p: T,
    n0: usize,
    m: usize,
    seed: u64,
) -> Result<FitReport<T>> {
    let n = sample_count_two_stage(n0, m, seed)?;
    fit_constant_factor(oracle, d, p, n, seed.wrapping_add(0x5eed))
}

/// Seed of the second stage of [`fit_relative_error`].
pub fn second_stage_seed(seed: u64) -> u64 {
    seed ^ 0x9e37_79b9_7f4a_7c15
}

/// Relative-error fit: a constant-factor fit `q` on `⌊n/2⌋` queries, then a
/// constant-factor fit `q̂` of `f − q` on the remaining `⌈n/2⌉`; returns
/// `q + q̂`.
pub fn fit_relative_error<T: Scalar>(oracle: &dyn Oracle<T>, d: usize, p: T, n: usize, seed: u64) -> Result<FitReport<T>> {
    check_finite_p(p)?;
    if n < 2 * (d + 1) {
        return Err(Error::Parameter(format!("need n >= 2(d + 1) = {}, got {n}", 2 * (d + 1))));
    }
    let before = oracle.query_count();
    let (q, res1, set1) = constant_factor_stage(oracle, d, p, n / 2, seed)?;
    let residual = Residual::new(oracle, q.clone());
    let (q_hat, res2, set2) = constant_factor_stage(&residual, d, p, n - n / 2, second_stage_seed(seed))?;
    let poly = q.add(&q_hat)?;
    Ok(FitReport {
        poly_monomial: monomial_form(&poly)?,
        est_error: lp_error(oracle, Some(&poly), p)?,
        poly,
        stage_results: vec![res1, res2],
        samples: vec![set1, set2],
        n_queries: oracle.query_count() - before,
        p,
        seed,
    })
}

/// Default `p` of the sup-norm pipeline, `max(3, ⌈ln(d + 1)⌉ + 2)`.
pub fn linf_default_p(d: usize) -> f64 {
    (((d + 1) as f64).ln().ceil() + 2.0).max(3.0)
}

/// Row weight `((d·p/n) √(1 − t²))^{1/p}` of the sup-norm pipeline; `d` is
/// floored at 1 so constant fits keep positive weights.
pub fn linf_row_weight<T: Scalar>(t: T, d: usize, p: T, n: usize) -> T {
    let dd = T::from_usize_lossy(d.max(1));
    (dd * p / T::from_usize_lossy(n) * (T::one() - t * t).sqrt()).powf(T::one() / p)
}

/// Sup-norm fit: `n` Chebyshev-distributed queries, rows weighted by
/// [`linf_row_weight`], weighted discrete minimax solve. `est_error` is the
/// sup-norm of the residual on a dense grid.
pub fn fit_linf<T: Scalar>(
    oracle: &dyn Oracle<T>,
    d: usize,
    n: usize,
    seed: u64,
    p_override: Option<T>,
) -> Result<FitReport<T>> {
    if n < d + 1 {
        return Err(Error::Parameter(format!("need n >= d + 1 = {}, got {n}", d + 1)));
    }
    let p = p_override.unwrap_or_else(|| T::lit(linf_default_p(d)));
    check_finite_p(p)?;
    let before = oracle.query_count();
    let (poly, res, set) = chebyshev_stage(
        oracle,
        d,
        n,
        seed,
        |t| linf_row_weight(t, d, p, n),
        |design, b, s| solve_linf(&design.matrix, b, s, &SolveOptions::linf_default()),
    )?;
    Ok(FitReport {
        poly_monomial: monomial_form(&poly)?,
        est_error: lp_error(oracle, Some(&poly), T::infinity())?,
        poly,
        stage_results: vec![res],
        samples: vec![set],
        n_queries: oracle.query_count() - before,
        p: T::infinity(),
        seed,
    })
}

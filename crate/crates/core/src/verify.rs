//! Numerical checks of the reweighted-leverage, sensitivity and
//! lower-bound statements, organised as independent sweep cells.
//!
//! Every check produces a [`CellOutcome`] naming its parameters. Cells are
//! pure functions of their inputs and seeds, so sweeps run them in
//! parallel and still produce identical output on every run.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::active::{fit_relative_error, lp_error, FunctionOracle, Oracle};
use crate::error::{Error, Result};
use crate::linalg::Qr;
use crate::lpsolve::{solve, RegressionProblem, SolveOptions};
use crate::measures::{cdf_chebyshev, density, sample, MeasureSpec};
use crate::orthopoly::{BasisKind, PolyCoeffs};
use crate::quadrature::composite_gauss_legendre;
use crate::scalar::Scalar;
use crate::weights::{operator_reweighted_leverage, operator_sensitivity, DesignMatrix, ReweightedGram};

/// Outcome of one named check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellOutcome {
    /// Parameters of the cell, e.g. `d=8 p=1 C=1`.
    pub cell: String,
    pub check: String,
    pub value: f64,
    pub bound: f64,
    pub passed: bool,
    pub error: Option<String>,
}

impl CellOutcome {
    fn at_most(cell: &str, check: &str, value: f64, bound: f64) -> Self {
        Self {
            cell: cell.into(),
            check: check.into(),
            value,
            bound,
            passed: value <= bound,
            error: None,
        }
    }

    fn at_least(cell: &str, check: &str, value: f64, bound: f64) -> Self {
        Self {
            passed: value >= bound,
            ..Self::at_most(cell, check, value, bound)
        }
    }

    /// A cell whose computation failed.
    pub fn failed(cell: &str, check: &str, err: &Error) -> Self {
        Self {
            cell: cell.into(),
            check: check.into(),
            value: f64::NAN,
            bound: f64::NAN,
            passed: false,
            error: Some(err.to_string()),
        }
    }
}

/// Points of `(-1, 1)`: `cos(π(k + ½)/size)` for `k < size`, plus
/// `±(1 − 10^{−k})` for `k = 2..=8`, sorted ascending.
pub fn standard_grid<T: Scalar>(size: usize) -> Vec<T> {
    let n = T::from_usize_lossy(size.max(1));
    let mut grid: Vec<T> = (0..size)
        .map(|k| (T::PI() * (T::from_usize_lossy(k) + T::lit(0.5)) / n).cos())
        .collect();
    for k in 2..=8 {
        let e = T::one() - T::lit(10f64.powi(-k));
        grid.push(e);
        grid.push(-e);
    }
    grid.retain(|t| t.abs() < T::one());
    grid.sort_by(|a, b| a.partial_cmp(b).expect("finite grid"));
    grid.dedup();
    grid
}

fn fmt_p<T: Scalar>(p: T) -> String {
    let v = p.to_f64_lossy();
    if (v - 2.0 / 3.0).abs() < 1e-12 {
        "2/3".into()
    } else if v.is_infinite() {
        "inf".into()
    } else {
        format!("{v}")
    }
}

/// `τ[W^{1/2−1/p} P](t) / w(t)` over a grid, for the clipped measure `w`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioReport<T> {
    pub d: usize,
    pub p: T,
    pub clip: T,
    pub grid: Vec<T>,
    pub ratios: Vec<T>,
    pub max_ratio: T,
    pub min_ratio: T,
    /// `min_ratio · ln³ d`.
    pub min_ratio_times_log3d: T,
    /// Extremes over the points where the clipped measure equals `v`.
    pub mid_min_ratio: T,
    pub mid_max_ratio: T,
    /// Minimum over `|t| ≤ `[`lower_band_half_width`], the part of the mid
    /// region where `1 + (1 − 1/√(1 − t²))/(2(d + 1)) ≥ 1/γ`.
    pub band_min_ratio: T,
}

impl<T: Scalar> RatioReport<T> {
    pub fn cell(&self) -> String {
        format!("d={} p={} C={}", self.d, fmt_p(self.p), self.clip)
    }

    /// Harness bracket `max ≤ 10`, `min · ln³ d ≥ 0.01`, and for `p = 1` the
    /// band `[1/γ, γ]` with `γ = 5/4 + πC/2`: the upper side over the whole
    /// mid region, the lower side over the narrower lower band. Near the
    /// edge of the mid region the ratio does drop below `1/γ` (to about
    /// 0.08 for `C = 1`).
    pub fn checks(&self) -> Vec<CellOutcome> {
        let cell = self.cell();
        let mut out = vec![
            CellOutcome::at_most(&cell, "max_ratio", self.max_ratio.to_f64_lossy(), RATIO_MAX),
            CellOutcome::at_least(&cell, "min_ratio_times_log3d", self.min_ratio_times_log3d.to_f64_lossy(), RATIO_MIN_LOG3),
        ];
        if (self.p - T::one()).abs() < T::lit(1e-12) {
            let gamma = mid_gamma(self.clip).to_f64_lossy();
            out.push(CellOutcome::at_most(&cell, "mid_max_ratio", self.mid_max_ratio.to_f64_lossy(), gamma));
            out.push(CellOutcome::at_least(&cell, "band_min_ratio", self.band_min_ratio.to_f64_lossy(), 1.0 / gamma));
        }
        out
    }
}

/// Measured bracket of the clipped-measure ratio (harness thresholds, not
/// constants from theory).
pub const RATIO_MAX: f64 = 10.0;
pub const RATIO_MIN_LOG3: f64 = 0.01;
/// Allowed spread of a d-independent constant across a degree sweep.
pub const STABILITY_FACTOR: f64 = 2.0;

/// `γ = 5/4 + πC/2`.
pub fn mid_gamma<T: Scalar>(clip: T) -> T {
    T::lit(1.25) + T::PI() * clip / T::lit(2.0)
}

/// Half-width of `{t : 1 + (1 − 1/√(1 − t²))/(2(d + 1)) ≥ 1/γ}`.
pub fn lower_band_half_width<T: Scalar>(d: usize, clip: T) -> T {
    let g = mid_gamma(clip);
    let s = T::one() / (T::one() + T::lit(2.0) * T::from_usize_lossy(d + 1) * (T::one() - T::one() / g));
    (T::one() - s * s).sqrt()
}

fn ratio_cell<T: Scalar>(d: usize, p: T, clip: T, grid: &[T]) -> Result<RatioReport<T>> {
    let measure = MeasureSpec::clipped(d, clip)?;
    let gram = ReweightedGram::new(measure, p, None)?;
    let half = measure.mid_region_half_width();
    let band = lower_band_half_width(d, clip);
    let mut band_lo = T::infinity();
    let mut ratios = Vec::with_capacity(grid.len());
    let (mut lo, mut hi) = (T::infinity(), T::zero());
    let (mut mid_lo, mut mid_hi) = (T::infinity(), T::zero());
    for &t in grid {
        let r = gram.eval(t)? / density(&measure, t)?;
        if !(r.is_finite() && r > T::zero()) {
            return Err(Error::Conditioning(format!("ratio {r} at t = {t}")));
        }
        lo = lo.min(r);
        hi = hi.max(r);
        if t.abs() <= half {
            mid_lo = mid_lo.min(r);
            mid_hi = mid_hi.max(r);
        }
        if t.abs() <= band {
            band_lo = band_lo.min(r);
        }
        ratios.push(r);
    }
    let ln = T::from_usize_lossy(d).ln();
    Ok(RatioReport {
        d,
        p,
        clip,
        grid: grid.to_vec(),
        ratios,
        max_ratio: hi,
        min_ratio: lo,
        min_ratio_times_log3d: lo * ln * ln * ln,
        mid_min_ratio: mid_lo,
        mid_max_ratio: mid_hi,
        band_min_ratio: band_lo,
    })
}

/// One [`RatioReport`] per `(d, p)` on [`standard_grid`]`(grid_size)`,
/// in `d`-major order. Cells run in parallel.
pub fn verify_ratio_bounds<T: Scalar>(d_list: &[usize], p_list: &[T], grid_size: usize, clip: T) -> Vec<Result<RatioReport<T>>> {
    let grid = standard_grid::<T>(grid_size);
    let cells: Vec<(usize, T)> = d_list.iter().flat_map(|&d| p_list.iter().map(move |&p| (d, p))).collect();
    cells.into_par_iter().map(|(d, p)| ratio_cell(d, p, clip, &grid)).collect()
}

/// Spread `max / min` of `values`.
pub fn spread(values: &[f64]) -> f64 {
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    hi / lo
}

/// Cross-degree checks: for each `(p, C)`, `max_ratio` and `min_ratio` vary
/// by less than [`STABILITY_FACTOR`] across the degrees present.
pub fn ratio_stability_checks<T: Scalar>(reports: &[RatioReport<T>]) -> Vec<CellOutcome> {
    let mut keys: Vec<(T, T)> = Vec::new();
    for r in reports {
        if !keys.iter().any(|&k| k == (r.p, r.clip)) {
            keys.push((r.p, r.clip));
        }
    }
    let mut out = Vec::new();
    for (p, clip) in keys {
        let group: Vec<&RatioReport<T>> = reports.iter().filter(|r| r.p == p && r.clip == clip).collect();
        if group.len() < 2 {
            continue;
        }
        let ds: Vec<String> = group.iter().map(|r| r.d.to_string()).collect();
        let cell = format!("d={{{}}} p={} C={}", ds.join(","), fmt_p(p), group[0].clip);
        let maxes: Vec<f64> = group.iter().map(|r| r.max_ratio.to_f64_lossy()).collect();
        let mins: Vec<f64> = group.iter().map(|r| r.min_ratio.to_f64_lossy()).collect();
        out.push(CellOutcome::at_most(&cell, "max_ratio_spread", spread(&maxes), STABILITY_FACTOR));
        out.push(CellOutcome::at_most(&cell, "min_ratio_spread", spread(&mins), STABILITY_FACTOR));
    }
    out
}

/// `τ[V^{1/2−1/p} P](t) / v(t)` at `t = 1 − 10^{−k}`, `k = 2..=8`, under the
/// unclipped Chebyshev density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndcapReport<T> {
    pub d: usize,
    pub p: T,
    pub points: Vec<T>,
    pub ratios: Vec<T>,
    pub strictly_decreasing: bool,
}

impl<T: Scalar> EndcapReport<T> {
    pub fn cell(&self) -> String {
        format!("d={} p={}", self.d, fmt_p(self.p))
    }

    /// For `p < 2`: strict decay and a last ratio below 0.1. For `p = 2`:
    /// every ratio at most 2.
    pub fn checks(&self) -> Vec<CellOutcome> {
        let cell = self.cell();
        let last = self.ratios.last().map_or(f64::NAN, |r| r.to_f64_lossy());
        if self.p < T::lit(2.0) {
            vec![
                CellOutcome::at_least(&cell, "endcap_decreasing", f64::from(u8::from(self.strictly_decreasing)), 1.0),
                CellOutcome::at_most(&cell, "endcap_last_ratio", last, 0.1),
            ]
        } else {
            let hi = self.ratios.iter().fold(0.0f64, |m, r| m.max(r.to_f64_lossy()));
            vec![CellOutcome::at_most(&cell, "endcap_max_ratio", hi, 2.0)]
        }
    }
}

pub fn verify_unclipped_endcap_decay<T: Scalar>(d: usize, p: T) -> Result<EndcapReport<T>> {
    let measure = MeasureSpec::chebyshev(d);
    let points: Vec<T> = (2..=8)
        .map(|k| T::one() - T::lit(10f64.powi(-k)))
        .filter(|t| *t < T::one())
        .collect();
    let ratios = points
        .iter()
        .map(|&t| Ok(operator_reweighted_leverage(t, d, p, &measure)? / density(&measure, t)?))
        .collect::<Result<Vec<T>>>()?;
    let strictly_decreasing = ratios.windows(2).all(|w| w[1] < w[0]);
    Ok(EndcapReport {
        d,
        p,
        points,
        ratios,
        strictly_decreasing,
    })
}

/// `min_{deg q ≤ d} ‖f − q‖_p` on `[-1, 1]` by a weighted regression on a
/// fine composite Gauss–Legendre rule split at the oracle's breakpoints.
pub fn dense_lp_opt<T: Scalar>(oracle: &dyn Oracle<T>, d: usize, p: T) -> Result<(PolyCoeffs<T>, T)> {
    let rule = composite_gauss_legendre::<T>(256, 16, &oracle.breakpoints());
    let design = DesignMatrix::from_points(&rule.nodes, d, BasisKind::ChebyshevT)?;
    let b: Vec<T> = rule.nodes.iter().map(|&t| oracle.eval(t)).collect();
    let w: Vec<T> = rule.weights.iter().map(|w| w.powf(T::one() / p)).collect();
    let res = solve(&RegressionProblem::new(design.matrix, b, w, p)?, &SolveOptions::default())?;
    Ok((PolyCoeffs::new(BasisKind::ChebyshevT, res.x)?, res.objective))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdversaryConfig {
    pub p: f64,
    pub eps: f64,
    pub n_queries: usize,
    pub trials: usize,
    pub seed: u64,
    /// Half-width of the hidden interval; `1/(8 n_queries)` when absent.
    pub half_width: Option<f64>,
    /// Fit degree; `clamp(n_queries/2 − 1, 0, 4)` when absent.
    pub degree: Option<usize>,
}

impl AdversaryConfig {
    pub fn new(p: f64, eps: f64, n_queries: usize, trials: usize, seed: u64) -> Self {
        Self {
            p,
            eps,
            n_queries,
            trials,
            seed,
            half_width: None,
            degree: None,
        }
    }

    pub fn half_width(&self) -> f64 {
        self.half_width.unwrap_or(1.0 / (8.0 * self.n_queries as f64))
    }

    pub fn degree(&self) -> usize {
        self.degree.unwrap_or((self.n_queries / 2).saturating_sub(1).min(4))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdversaryTrial {
    pub trial: usize,
    pub seed: u64,
    /// `+1` or `−1`: which of the two hidden spikes was drawn.
    pub sign: i8,
    pub missed: bool,
    pub error_pow: f64,
    pub failed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdversaryReport {
    pub config: AdversaryConfig,
    pub degree: usize,
    pub interval: (f64, f64),
    pub height: f64,
    /// Chebyshev-measure mass of the hidden interval.
    pub interval_mass: f64,
    /// `(1 − mass)^n`.
    pub analytic_miss_prob: f64,
    /// `C = 2^{−1/p} − 1/2`; a trial fails when `err^p > (1 + Cε) OPT^p`.
    pub guarantee_constant: f64,
    pub opt_pow: f64,
    pub miss_rate: f64,
    pub failure_rate: f64,
    pub failure_rate_given_miss: f64,
    pub trials: Vec<AdversaryTrial>,
}

/// Hides `±2^{1/p}/ε` on an interval where the Chebyshev sampler has the
/// least mass (centred at 0), runs [`fit_relative_error`] with `n_queries`,
/// and records whether any query landed in the interval and whether the fit
/// met the `(1 + Cε)` guarantee. Trials run in parallel.
pub fn adversary_lower_bound(config: &AdversaryConfig) -> Result<AdversaryReport> {
    let (p, eps, n) = (config.p, config.eps, config.n_queries);
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::Parameter(format!("adversary needs finite p > 1, got {p}")));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Parameter(format!("eps must lie in (0, 1), got {eps}")));
    }
    if config.trials == 0 {
        return Err(Error::Parameter("need at least one trial".into()));
    }
    let d = config.degree();
    if n < 2 * (d + 1) {
        return Err(Error::Parameter(format!("need n_queries >= {}", 2 * (d + 1))));
    }
    let h = config.half_width();
    let height = 2f64.powf(1.0 / p) / eps;
    let mass = cdf_chebyshev(h) - cdf_chebyshev(-h);
    let c = 2f64.powf(-1.0 / p) - 0.5;
    let spike = FunctionOracle::spike(0.0, 2.0 * h, height)?;
    let opt_pow = dense_lp_opt(&spike, d, p)?.1.powf(p);

    let trials = (0..config.trials)
        .into_par_iter()
        .map(|trial| {
            let seed = config.seed.wrapping_add(trial as u64);
            let sign: i8 = if seed_bit(seed) { 1 } else { -1 };
            let f = FunctionOracle::spike(0.0, 2.0 * h, f64::from(sign) * height)?;
            let rep = fit_relative_error(&f, d, p, n, seed)?;
            let missed = rep.samples.iter().flat_map(|s| &s.points).all(|t| t.abs() > h);
            let error_pow = rep.est_error.powf(p);
            Ok(AdversaryTrial {
                trial,
                seed,
                sign,
                missed,
                error_pow,
                failed: error_pow > (1.0 + c * eps) * opt_pow,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let total = trials.len() as f64;
    let misses = trials.iter().filter(|t| t.missed).count();
    let failures = trials.iter().filter(|t| t.failed).count();
    let miss_failures = trials.iter().filter(|t| t.missed && t.failed).count();
    Ok(AdversaryReport {
        config: *config,
        degree: d,
        interval: (-h, h),
        height,
        interval_mass: mass,
        analytic_miss_prob: (1.0 - mass).powi(n as i32),
        guarantee_constant: c,
        opt_pow,
        miss_rate: misses as f64 / total,
        failure_rate: failures as f64 / total,
        failure_rate_given_miss: if misses == 0 {
            f64::NAN
        } else {
            miss_failures as f64 / misses as f64
        },
        trials,
    })
}

/// Fair coin from a seed (SplitMix64 finalizer, low bit).
fn seed_bit(seed: u64) -> bool {
    let mut z = seed.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    (z ^ (z >> 31)) & 1 == 1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeScheme {
    /// `n = d + 1`: the `(k + ½)/n` quantiles of each measure.
    Quantile,
    /// `n` independent draws from each measure.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RungeReport {
    pub d: usize,
    pub n: usize,
    pub seed: u64,
    pub nodes: NodeScheme,
    pub uniform_error: f64,
    pub chebyshev_error: f64,
    /// `uniform_error / chebyshev_error`.
    pub ratio: f64,
}

fn least_squares_sup_error(f: &dyn Oracle<f64>, d: usize, points: &[f64], weights: &[f64]) -> Result<f64> {
    let design = DesignMatrix::from_points(points, d, BasisKind::ChebyshevT)?;
    let b: Vec<f64> = points.iter().zip(weights).map(|(&t, &w)| w * f.query(t)).collect();
    let x = Qr::new(&design.matrix.scale_rows(weights)).solve_lsq(&b)?;
    let q = PolyCoeffs::new(BasisKind::ChebyshevT, x)?;
    lp_error(f, Some(&q), f64::INFINITY)
}

/// Least-squares fits of `1/(1 + 25t²)` at degree `d` from `n` uniform and
/// `n` Chebyshev-distributed nodes; sup-norm errors on a dense grid.
/// Chebyshev rows carry the weight `(1 − t²)^{1/4}`; uniform rows are
/// unweighted.
pub fn runge_comparison(d: usize, n: usize, seed: u64) -> Result<RungeReport> {
    if n < d + 1 {
        return Err(Error::Parameter(format!("need n >= d + 1 = {}, got {n}", d + 1)));
    }
    let f = FunctionOracle::<f64>::runge();
    let (nodes, uni, cheb) = if n == d + 1 {
        let q = |k: usize| (k as f64 + 0.5) / n as f64;
        let uni: Vec<f64> = (0..n).map(|k| 2.0 * q(k) - 1.0).collect();
        let cheb: Vec<f64> = (0..n).map(|k| -(std::f64::consts::PI * q(k)).cos()).collect();
        (NodeScheme::Quantile, uni, cheb)
    } else {
        let uni = sample(&MeasureSpec::<f64>::uniform(d), n, seed)?.points;
        let cheb = sample(&MeasureSpec::<f64>::chebyshev(d), n, seed)?.points;
        (NodeScheme::Random, uni, cheb)
    };
    let uniform_error = least_squares_sup_error(&f, d, &uni, &vec![1.0; n])?;
    let cw: Vec<f64> = cheb.iter().map(|t| (1.0 - t * t).powf(0.25)).collect();
    let chebyshev_error = least_squares_sup_error(&f, d, &cheb, &cw)?;
    Ok(RungeReport {
        d,
        n,
        seed,
        nodes,
        uniform_error,
        chebyshev_error,
        ratio: uniform_error / chebyshev_error,
    })
}

/// Operator sensitivities on a grid with the global bound `d²(p + 1)` and
/// the fitted interior constant `κ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport<T> {
    pub d: usize,
    pub p: T,
    pub grid: Vec<T>,
    pub sensitivities: Vec<T>,
    /// `d² (p + 1)`.
    pub global_bound: T,
    pub max_over_bound: T,
    pub min_sensitivity: T,
    /// `max ψ(t) √(1 − t²) / (d p ln(d p))` over `|t| ≤ 1 − 1/d`.
    pub kappa: T,
}

impl<T: Scalar> SensitivityReport<T> {
    pub fn cell(&self) -> String {
        format!("d={} p={}", self.d, fmt_p(self.p))
    }

    pub fn checks(&self) -> Vec<CellOutcome> {
        let cell = self.cell();
        vec![
            CellOutcome::at_most(&cell, "sensitivity_over_global_bound", self.max_over_bound.to_f64_lossy(), 1.05),
            CellOutcome::at_least(&cell, "min_sensitivity", self.min_sensitivity.to_f64_lossy(), 0.5),
            CellOutcome::at_least(&cell, "kappa_finite", f64::from(u8::from(self.kappa.is_finite())), 1.0),
        ]
    }
}

/// Quadrature nodes behind each sensitivity evaluation.
pub const SENSITIVITY_QUAD_NODES: usize = 2048;

/// [`operator_sensitivity`] on [`standard_grid`]`(grid_size)`; grid points
/// run in parallel.
pub fn verify_sensitivity_bounds<T: Scalar>(d: usize, p: T, grid_size: usize) -> Result<SensitivityReport<T>> {
    if d == 0 {
        return Err(Error::Parameter("sensitivity sweep needs d >= 1".into()));
    }
    let grid = standard_grid::<T>(grid_size);
    let sensitivities = grid
        .par_iter()
        .map(|&t| operator_sensitivity(t, d, p, SENSITIVITY_QUAD_NODES))
        .collect::<Result<Vec<T>>>()?;
    let dd = T::from_usize_lossy(d);
    let global_bound = dd * dd * (p + T::one());
    let dp = dd * p;
    let interior = T::one() - T::one() / dd;
    let mut kappa = T::zero();
    let mut max_over = T::zero();
    let mut min_s = T::infinity();
    for (&t, &s) in grid.iter().zip(&sensitivities) {
        max_over = max_over.max(s / global_bound);
        min_s = min_s.min(s);
        if t.abs() <= interior {
            kappa = kappa.max(s * (T::one() - t * t).sqrt() / (dp * dp.ln()));
        }
    }
    Ok(SensitivityReport {
        d,
        p,
        grid,
        sensitivities,
        global_bound,
        max_over_bound: max_over,
        min_sensitivity: min_s,
        kappa,
    })
}

/// For each `p`, `κ` varies by less than [`STABILITY_FACTOR`] across the
/// degrees present.
pub fn sensitivity_stability_checks<T: Scalar>(reports: &[SensitivityReport<T>]) -> Vec<CellOutcome> {
    let mut ps: Vec<T> = Vec::new();
    for r in reports {
        if !ps.iter().any(|&p| p == r.p) {
            ps.push(r.p);
        }
    }
    ps.into_iter()
        .filter_map(|p| {
            let group: Vec<&SensitivityReport<T>> = reports.iter().filter(|r| r.p == p).collect();
            if group.len() < 2 {
                return None;
            }
            let ds: Vec<String> = group.iter().map(|r| r.d.to_string()).collect();
            let kappas: Vec<f64> = group.iter().map(|r| r.kappa.to_f64_lossy()).collect();
            let cell = format!("d={{{}}} p={}", ds.join(","), fmt_p(p));
            Some(CellOutcome::at_most(&cell, "kappa_spread", spread(&kappas), STABILITY_FACTOR))
        })
        .collect()
}

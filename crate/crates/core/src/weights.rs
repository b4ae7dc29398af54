//! Leverage scores, ℓ_p Lewis weights and ℓ_p sensitivities, for finite
//! matrices and for the polynomial operator on `[-1, 1]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{norm2, Cholesky, Mat, Qr};
use crate::lpsolve::{solve, RegressionProblem, SolveOptions};
use crate::measures::{density, MeasureKind, MeasureSpec};
use crate::orthopoly::{basis_values, eval_chebyshev_u, BasisKind};
use crate::quadrature::{composite_gauss_legendre, gauss_chebyshev};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightKind {
    Leverage,
    Lewis,
    Sensitivity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector<T> {
    pub values: Vec<T>,
    pub kind: WeightKind,
    pub p: T,
    pub converged: bool,
    /// `max_i |τ_i(W^{1/2−1/p} A) − w_i| / w_i` for Lewis weights, 0 otherwise.
    pub fixpoint_residual: T,
}

impl<T: Scalar> WeightVector<T> {
    pub fn sum(&self) -> T {
        self.values.iter().copied().sum()
    }
}

/// A dense design matrix, optionally generated by evaluating a polynomial
/// basis at `row_points`.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix<T> {
    pub matrix: Mat<T>,
    pub row_points: Option<Vec<T>>,
    pub basis: Option<BasisKind<T>>,
}

impl<T: Scalar> DesignMatrix<T> {
    /// Rows `[φ_0(t_i), …, φ_d(t_i)]`.
    pub fn from_points(points: &[T], degree: usize, basis: BasisKind<T>) -> Result<Self> {
        let mut data = Vec::with_capacity(points.len() * (degree + 1));
        for &t in points {
            data.extend(basis_values(basis, degree, t)?);
        }
        Ok(Self {
            matrix: Mat::from_fn(points.len(), degree + 1, |i, j| data[i * (degree + 1) + j]),
            row_points: Some(points.to_vec()),
            basis: Some(basis),
        })
    }

    pub fn rows(&self) -> usize {
        self.matrix.rows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.cols()
    }
}

impl<T> From<Mat<T>> for DesignMatrix<T> {
    fn from(matrix: Mat<T>) -> Self {
        Self {
            matrix,
            row_points: None,
            basis: None,
        }
    }
}

fn leverage_scores<T: Scalar>(a: &Mat<T>) -> Result<Vec<T>> {
    let qr = Qr::new(a);
    qr.require_full_rank()?;
    let q = qr.thin_q();
    Ok((0..q.rows()).map(|i| q.row(i).iter().map(|&v| v * v).sum()).collect())
}

/// `τ_i = a_iᵀ (AᵀA)⁻¹ a_i`, as squared row norms of the thin `Q` factor.
pub fn matrix_leverage<T: Scalar>(a: &Mat<T>) -> Result<WeightVector<T>> {
    Ok(WeightVector {
        values: leverage_scores(a)?,
        kind: WeightKind::Leverage,
        p: T::lit(2.0),
        converged: true,
        fixpoint_residual: T::zero(),
    })
}

/// ℓ_p Lewis weights by the fixed-point iteration
/// `w_i ← (a_iᵀ (Aᵀ W^{1−2/p} A)⁻¹ a_i)^{p/2}`, started at `cols/n`.
/// Switches to the damped update `w ← √(w · w_new)` if the residual grows.
pub fn matrix_lewis_weights<T: Scalar>(a: &Mat<T>, p: T, tol: T, max_iter: usize) -> Result<WeightVector<T>> {
    if !(p > T::zero() && p < T::lit(4.0)) {
        return Err(Error::Parameter(format!("Lewis weights need p in (0, 4), got {p}")));
    }
    if !(tol > T::zero()) {
        return Err(Error::Parameter(format!("tolerance must be positive, got {tol}")));
    }
    Qr::new(a).require_full_rank()?;
    let (n, k) = (a.rows(), a.cols());
    let half = T::lit(0.5);
    let expo = half - T::one() / p;
    let mut w = vec![T::from_usize_lossy(k) / T::from_usize_lossy(n); n];
    let mut damped = false;
    let mut prev_residual = T::infinity();
    let mut residual = T::infinity();

    for _ in 0..max_iter.max(1) {
        let scale: Vec<T> = w
            .iter()
            .map(|&wi| if wi > T::zero() { wi.powf(expo) } else { T::zero() })
            .collect();
        let tau = leverage_scores(&a.scale_rows(&scale))?;
        residual = w
            .iter()
            .zip(&tau)
            .filter(|(&wi, _)| wi > T::zero())
            .map(|(&wi, &ti)| (ti - wi).abs() / wi)
            .fold(T::zero(), T::max);
        if residual <= tol {
            return Ok(WeightVector {
                values: w,
                kind: WeightKind::Lewis,
                p,
                converged: true,
                fixpoint_residual: residual,
            });
        }
        if residual > prev_residual {
            damped = true;
        }
        prev_residual = residual;
        for ((wi, &ti), &si) in w.iter_mut().zip(&tau).zip(&scale) {
            if *wi == T::zero() || si == T::zero() {
                continue;
            }
            // a_iᵀ(AᵀW^{1−2/p}A)⁻¹a_i = τ_i / w_i^{1−2/p}
            let quad = ti / (si * si);
            let next = quad.powf(p * half);
            *wi = if damped { (*wi * next).sqrt() } else { next };
        }
    }
    Err(Error::NonConvergence {
        iterations: max_iter,
        residual: residual.to_f64_lossy(),
    })
}

fn check_open<T: Scalar>(t: T) -> Result<()> {
    if t.abs() < T::one() {
        Ok(())
    } else {
        Err(Error::domain(t, "(-1, 1)"))
    }
}

fn check_lewis_p<T: Scalar>(p: T) -> Result<()> {
    let lo = T::lit(2.0 / 3.0) * (T::one() - T::lit(1e-12));
    if p >= lo && p <= T::lit(2.0) {
        Ok(())
    } else {
        Err(Error::Parameter(format!("p must lie in [2/3, 2], got {p}")))
    }
}

/// Leverage function of degree-`d` polynomials under Lebesgue measure,
/// `τ[P](t) = Σ_{i≤d} L_i(t)²` with orthonormal Legendre `L_i`.
pub fn operator_leverage<T: Scalar>(t: T, d: usize) -> Result<T> {
    check_open(t)?;
    Ok(basis_values(BasisKind::LegendreNormalized, d, t)?
        .into_iter()
        .map(|v| v * v)
        .sum())
}

/// Leverage function of the reweighted operator `M^{1/2−1/p} P`, where `M` is
/// multiplication by the density of `measure`.
///
/// For the Chebyshev density this is `(1 − t²)^α Σ J_i(t)²` with `J_i` the
/// orthonormal Gegenbauer polynomials of parameter `α = 1/p − 1/2`. For the
/// clipped measure a [`ReweightedGram`] is assembled; reuse one directly when
/// evaluating many points.
pub fn operator_reweighted_leverage<T: Scalar>(t: T, d: usize, p: T, measure: &MeasureSpec<T>) -> Result<T> {
    check_open(t)?;
    check_lewis_p(p)?;
    match measure.kind {
        MeasureKind::Chebyshev => {
            let alpha = T::one() / p - T::lit(0.5);
            let s: T = basis_values(BasisKind::GegenbauerNormalized { alpha }, d, t)?
                .into_iter()
                .map(|v| v * v)
                .sum();
            Ok((T::one() - t * t).powf(alpha) * s)
        }
        MeasureKind::ClippedChebyshev { .. } => ReweightedGram::new(MeasureSpec { degree: d, ..*measure }, p, None)?.eval(t),
        MeasureKind::Uniform => Err(Error::Parameter("reweighted leverage needs a Chebyshev-type measure".into())),
    }
}

/// Gram matrix `G = ∫ m(s)^{1−2/p} r(s) r(s)ᵀ ds` of the Chebyshev-T basis
/// row `r(s)` under a measure density `m`, discretized with Gauss–Chebyshev
/// nodes (the `√(1 − s²)` factor absorbs the endpoint behaviour).
#[derive(Debug, Clone)]
pub struct ReweightedGram<T> {
    measure: MeasureSpec<T>,
    p: T,
    chol: Cholesky<T>,
}

impl<T: Scalar> ReweightedGram<T> {
    /// Default node count `max(4000, 100 d²)`.
    pub fn default_nodes(d: usize) -> usize {
        4000.max(100 * d * d)
    }

    pub fn new(measure: MeasureSpec<T>, p: T, nodes: Option<usize>) -> Result<Self> {
        check_lewis_p(p)?;
        if matches!(measure.kind, MeasureKind::Uniform) {
            return Err(Error::Parameter("reweighted leverage needs a Chebyshev-type measure".into()));
        }
        let d = measure.degree;
        let k = d + 1;
        let expo = T::one() - T::lit(2.0) / p;
        let rule = gauss_chebyshev::<T>(nodes.unwrap_or_else(|| Self::default_nodes(d)));
        let mut g = Mat::zeros(k, k);
        for (&s, &wq) in rule.nodes.iter().zip(&rule.weights) {
            let m = density(&measure, s)?;
            let c = wq * (T::one() - s * s).sqrt() * m.powf(expo);
            let r = basis_values(BasisKind::ChebyshevT, d, s)?;
            for i in 0..k {
                let ci = c * r[i];
                for j in 0..=i {
                    g[(i, j)] = g[(i, j)] + ci * r[j];
                }
            }
        }
        for i in 0..k {
            for j in 0..i {
                g[(j, i)] = g[(i, j)];
            }
        }
        let chol = Cholesky::new(&g)?;
        Ok(Self { measure, p, chol })
    }

    /// `m(t)^{1−2/p} r(t)ᵀ G⁻¹ r(t)`.
    pub fn eval(&self, t: T) -> Result<T> {
        check_open(t)?;
        let r = basis_values(BasisKind::ChebyshevT, self.measure.degree, t)?;
        let m = density(&self.measure, t)?;
        Ok(m.powf(T::one() - T::lit(2.0) / self.p) * self.chol.inv_quad_form(&r))
    }

    pub fn measure(&self) -> &MeasureSpec<T> {
        &self.measure
    }
}

/// Closed form of `τ[V^{−1/2} P](t) / v(t)` (the `p = 1` Lewis ratio under the
/// Chebyshev density): `1 + (1 − U_{2(d+1)}(t)) / (2(d+1))`.
pub fn lewis_ratio_p1<T: Scalar>(t: T, d: usize) -> Result<T> {
    check_open(t)?;
    let m = T::from_usize_lossy(2 * (d + 1));
    Ok(T::one() + (T::one() - eval_chebyshev_u(2 * (d + 1), t)?) / m)
}

/// `min ‖S M x‖_p` subject to `cᵀx = 1`, via `x = c/‖c‖² + N z` with `N`
/// spanning the orthogonal complement of `c` (Householder reflector of `c`).
fn constrained_min<T: Scalar>(design: &Mat<T>, row_weights: &[T], c: &[T], p: T) -> Result<T> {
    let k = c.len();
    let nc = norm2(c);
    if nc == T::zero() {
        return Err(Error::Parameter("constraint row is zero".into()));
    }
    let x0: Vec<T> = c.iter().map(|&v| v / (nc * nc)).collect();
    let ax0 = design.mul_vec(&x0);
    if k == 1 {
        let r: Vec<T> = ax0.iter().zip(row_weights).map(|(&v, &s)| v * s).collect();
        return Ok(crate::lpsolve::pnorm(&r, p));
    }
    let mut v = c.to_vec();
    v[0] = v[0] + c[0].signum() * nc;
    if c[0] == T::zero() {
        v[0] = nc;
    }
    let vv: T = v.iter().map(|&x| x * x).sum();
    // columns 1.. of H = I − 2vvᵀ/(vᵀv)
    let null = Mat::from_fn(k, k - 1, |i, j| {
        let id = if i == j + 1 { T::one() } else { T::zero() };
        id - T::lit(2.0) * v[i] * v[j + 1] / vv
    });
    let problem = RegressionProblem::new(
        design.mul_mat(&null),
        ax0.iter().map(|&v| -v).collect(),
        row_weights.to_vec(),
        p,
    )?;
    let res = solve(&problem, &SolveOptions::default())?;
    if !res.converged {
        return Err(Error::NonConvergence {
            iterations: res.iterations,
            residual: res.smoothing_final.to_f64_lossy(),
        });
    }
    Ok(res.objective)
}

/// ℓ_p sensitivity of row `i`: `max_x |a_iᵀx|^p / ‖Ax‖_p^p
/// = 1 / (min{‖Ax‖_p : a_iᵀx = 1})^p`.
pub fn matrix_sensitivity<T: Scalar>(a: &Mat<T>, i: usize, p: T) -> Result<T> {
    if !(p >= T::one()) {
        return Err(Error::Parameter(format!("sensitivity needs p >= 1, got {p}")));
    }
    if i >= a.rows() {
        return Err(Error::Parameter(format!("row {i} out of range")));
    }
    Qr::new(a).require_full_rank()?;
    let m = constrained_min(a, &vec![T::one(); a.rows()], a.row(i), p)?;
    Ok(T::one() / m.powf(p))
}

/// All row sensitivities of `A`.
pub fn matrix_sensitivities<T: Scalar>(a: &Mat<T>, p: T) -> Result<WeightVector<T>> {
    let values = (0..a.rows()).map(|i| matrix_sensitivity(a, i, p)).collect::<Result<Vec<_>>>()?;
    Ok(WeightVector {
        values,
        kind: WeightKind::Sensitivity,
        p,
        converged: true,
        fixpoint_residual: T::zero(),
    })
}

/// ℓ_p sensitivity of the point `t` for degree-`d` polynomials,
/// `max_q |q(t)|^p / ∫|q|^p`, with the integral discretized by a composite
/// Gauss–Legendre rule of about `quad_nodes` nodes (order 16, split at `t`).
pub fn operator_sensitivity<T: Scalar>(t: T, d: usize, p: T, quad_nodes: usize) -> Result<T> {
    check_open(t)?;
    if !(p >= T::one()) || p.is_infinite() {
        return Err(Error::Parameter(format!("sensitivity needs finite p >= 1, got {p}")));
    }
    let rule = composite_gauss_legendre::<T>((quad_nodes / 16).max(1), 16, &[t]);
    let design = DesignMatrix::from_points(&rule.nodes, d, BasisKind::ChebyshevT)?;
    let weights: Vec<T> = rule.weights.iter().map(|&w| w.powf(T::one() / p)).collect();
    let c = basis_values(BasisKind::ChebyshevT, d, t)?;
    let m = constrained_min(&design.matrix, &weights, &c, p)?;
    Ok(T::one() / m.powf(p))
}

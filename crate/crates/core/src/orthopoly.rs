//! Orthogonal polynomial families and polynomial coefficient vectors.
//!
//! All recurrence families are evaluated forward with the algebraic three-term
//! recurrence, including close to `|t| = 1`. Normalized families
//! (Legendre, Gegenbauer) use the orthonormal form of the recurrence,
//!
//! ```text
//! t·p_k(t) = a_{k+1} p_{k+1}(t) + a_k p_{k-1}(t),
//! a_k² = k (k + 2α) / ((2k + 2α − 1)(2k + 2α + 1)),
//! ```
//!
//! started from the constant `p_0 = 1/√h₀`, where `h₀ = ∫(1 − t²)^α dt` is
//! evaluated through log-Gamma.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::linalg::{Mat, Qr};
use crate::scalar::Scalar;

/// Largest degree for which conversions into the monomial basis are allowed.
pub const MAX_MONOMIAL_DEGREE: usize = 64;

/// Polynomial basis of the degree-`d` polynomial space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BasisKind<T> {
    Monomial,
    ChebyshevT,
    /// Legendre polynomials orthonormal on `[-1, 1]` with unit weight.
    LegendreNormalized,
    /// Gegenbauer (Jacobi with `α = β`) polynomials orthonormal under `(1 − t²)^α`.
    GegenbauerNormalized { alpha: T },
}

impl<T: Scalar> BasisKind<T> {
    fn validate(&self) -> Result<()> {
        if let BasisKind::GegenbauerNormalized { alpha } = *self {
            if !(alpha > -T::one()) {
                return Err(Error::Parameter(format!("Gegenbauer alpha must exceed -1, got {alpha}")));
            }
        }
        Ok(())
    }

    fn needs_unit_interval(&self) -> bool {
        !matches!(self, BasisKind::Monomial)
    }
}

/// A degree-`d` polynomial as `d + 1` coefficients in a given basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyCoeffs<T> {
    pub basis: BasisKind<T>,
    pub coeffs: Vec<T>,
}

impl<T: Scalar> PolyCoeffs<T> {
    pub fn new(basis: BasisKind<T>, coeffs: Vec<T>) -> Result<Self> {
        basis.validate()?;
        if coeffs.is_empty() {
            return Err(Error::Parameter("a polynomial needs at least one coefficient".into()));
        }
        if let Some(bad) = coeffs.iter().find(|c| !c.is_finite()) {
            return Err(Error::Parameter(format!("non-finite coefficient {bad}")));
        }
        Ok(Self { basis, coeffs })
    }

    pub fn zero(degree: usize, basis: BasisKind<T>) -> Self {
        Self {
            basis,
            coeffs: vec![T::zero(); degree + 1],
        }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, t: T) -> Result<T> {
        eval_poly(self, t)
    }

    /// Coefficient-wise sum; both operands must share a basis.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.basis != other.basis {
            return Err(Error::Parameter("cannot add polynomials in different bases".into()));
        }
        let n = self.coeffs.len().max(other.coeffs.len());
        let at = |c: &[T], i: usize| c.get(i).copied().unwrap_or_else(T::zero);
        Ok(Self {
            basis: self.basis,
            coeffs: (0..n).map(|i| at(&self.coeffs, i) + at(&other.coeffs, i)).collect(),
        })
    }
}

fn check_unit<T: Scalar>(t: T) -> Result<()> {
    if t.abs() > T::one() || t.is_nan() {
        Err(Error::domain(t, "[-1, 1]"))
    } else {
        Ok(())
    }
}

/// Off-diagonal coefficient `a_k` (k ≥ 1) of the orthonormal Gegenbauer recurrence.
fn gegenbauer_a<T: Scalar>(k: usize, alpha: T) -> T {
    let two = T::lit(2.0);
    if k == 1 {
        return T::one() / (two * alpha + T::lit(3.0)).sqrt();
    }
    let kf = T::from_usize_lossy(k);
    let num = kf * (kf + two * alpha);
    let den = (two * kf + two * alpha - T::one()) * (two * kf + two * alpha + T::one());
    (num / den).sqrt()
}

/// `∫_{-1}^{1} (1 − t²)^α dt = √π Γ(α + 1) / Γ(α + 3/2)`.
pub fn gegenbauer_weight_mass<T: Scalar>(alpha: T) -> T {
    let a = alpha.to_f64_lossy();
    let log_h0 = 0.5 * core::f64::consts::PI.ln() + ln_gamma(a + 1.0) - ln_gamma(a + 1.5);
    T::lit(log_h0.exp())
}

/// Fills `out[k] = p_k(t)` for an orthonormal symmetric family.
fn orthonormal_values<T: Scalar>(t: T, p0: T, a: impl Fn(usize) -> T, out: &mut [T]) {
    if out.is_empty() {
        return;
    }
    out[0] = p0;
    if out.len() > 1 {
        out[1] = t * p0 / a(1);
    }
    for k in 1..out.len().saturating_sub(1) {
        out[k + 1] = (t * out[k] - a(k) * out[k - 1]) / a(k + 1);
    }
}

/// Legendre polynomial of degree `i` normalized so that `∫ L_i² = 1` on `[-1, 1]`.
pub fn eval_legendre_normalized<T: Scalar>(i: usize, t: T) -> Result<T> {
    check_unit(t)?;
    let mut v = vec![T::zero(); i + 1];
    orthonormal_values(t, T::lit(0.5).sqrt(), |k| gegenbauer_a(k, T::zero()), &mut v);
    Ok(v[i])
}

/// Chebyshev polynomial of the second kind `U_i(t)`.
pub fn eval_chebyshev_u<T: Scalar>(i: usize, t: T) -> Result<T> {
    check_unit(t)?;
    let two_t = T::lit(2.0) * t;
    let (mut prev, mut cur) = (T::one(), two_t);
    if i == 0 {
        return Ok(prev);
    }
    for _ in 1..i {
        let next = two_t * cur - prev;
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// Chebyshev polynomial of the first kind `T_i(t) = cos(i arccos t)`.
pub fn eval_chebyshev_t<T: Scalar>(i: usize, t: T) -> Result<T> {
    check_unit(t)?;
    let (mut prev, mut cur) = (T::one(), t);
    if i == 0 {
        return Ok(prev);
    }
    for _ in 1..i {
        let next = T::lit(2.0) * t * cur - prev;
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// Gegenbauer polynomial of degree `i`, orthonormal under `(1 − t²)^α` on `[-1, 1]`.
pub fn eval_gegenbauer_normalized<T: Scalar>(i: usize, alpha: T, t: T) -> Result<T> {
    BasisKind::GegenbauerNormalized { alpha }.validate()?;
    check_unit(t)?;
    let mut v = vec![T::zero(); i + 1];
    let p0 = T::one() / gegenbauer_weight_mass(alpha).sqrt();
    orthonormal_values(t, p0, |k| gegenbauer_a(k, alpha), &mut v);
    Ok(v[i])
}

/// Values of the first `degree + 1` basis functions at `t`.
pub fn basis_values<T: Scalar>(basis: BasisKind<T>, degree: usize, t: T) -> Result<Vec<T>> {
    basis.validate()?;
    if basis.needs_unit_interval() {
        check_unit(t)?;
    }
    let mut out = vec![T::zero(); degree + 1];
    match basis {
        BasisKind::Monomial => {
            let mut x = T::one();
            for v in out.iter_mut() {
                *v = x;
                x = x * t;
            }
        }
        BasisKind::ChebyshevT => {
            out[0] = T::one();
            if degree >= 1 {
                out[1] = t;
            }
            for k in 1..degree {
                out[k + 1] = T::lit(2.0) * t * out[k] - out[k - 1];
            }
        }
        BasisKind::LegendreNormalized => {
            orthonormal_values(t, T::lit(0.5).sqrt(), |k| gegenbauer_a(k, T::zero()), &mut out);
        }
        BasisKind::GegenbauerNormalized { alpha } => {
            let p0 = T::one() / gegenbauer_weight_mass(alpha).sqrt();
            orthonormal_values(t, p0, |k| gegenbauer_a(k, alpha), &mut out);
        }
    }
    Ok(out)
}

/// Evaluates a polynomial: Horner for monomials, Clenshaw summation for the
/// recurrence bases.
pub fn eval_poly<T: Scalar>(poly: &PolyCoeffs<T>, t: T) -> Result<T> {
    poly.basis.validate()?;
    let c = &poly.coeffs;
    match poly.basis {
        BasisKind::Monomial => Ok(c.iter().rev().fold(T::zero(), |acc, &ck| acc * t + ck)),
        BasisKind::ChebyshevT => {
            check_unit(t)?;
            // p_{k+1} = α_k p_k − p_{k−1}, α_0 = t, α_k = 2t
            Ok(clenshaw(c, T::one(), |k| if k == 0 { t } else { T::lit(2.0) * t }, |_| -T::one()))
        }
        BasisKind::LegendreNormalized => {
            check_unit(t)?;
            let a = |k| gegenbauer_a(k, T::zero());
            Ok(clenshaw(c, T::lit(0.5).sqrt(), |k| t / a(k + 1), |k| -a(k) / a(k + 1)))
        }
        BasisKind::GegenbauerNormalized { alpha } => {
            check_unit(t)?;
            let a = |k| gegenbauer_a(k, alpha);
            let p0 = T::one() / gegenbauer_weight_mass(alpha).sqrt();
            Ok(clenshaw(c, p0, |k| t / a(k + 1), |k| -a(k) / a(k + 1)))
        }
    }
}

/// Clenshaw summation of `Σ c_k p_k` for `p_{k+1} = α_k p_k + β_k p_{k−1}`
/// with `p_1 = α_0 p_0`.
fn clenshaw<T: Scalar>(c: &[T], p0: T, alpha: impl Fn(usize) -> T, beta: impl Fn(usize) -> T) -> T {
    let (mut b1, mut b2) = (T::zero(), T::zero());
    for k in (0..c.len()).rev() {
        let bk = c[k] + alpha(k) * b1 + beta(k + 1) * b2;
        b2 = b1;
        b1 = bk;
    }
    p0 * b1
}

/// Re-expresses `poly` in the `target` basis by interpolation at `d + 1`
/// Chebyshev nodes.
pub fn convert_basis<T: Scalar>(poly: &PolyCoeffs<T>, target: BasisKind<T>) -> Result<PolyCoeffs<T>> {
    target.validate()?;
    if poly.basis == target {
        return Ok(poly.clone());
    }
    let d = poly.degree();
    if matches!(target, BasisKind::Monomial) && d > MAX_MONOMIAL_DEGREE {
        return Err(Error::Conditioning(format!(
            "refusing monomial conversion at degree {d} (limit {MAX_MONOMIAL_DEGREE})"
        )));
    }
    let n = d + 1;
    let nodes: Vec<T> = (0..n)
        .map(|k| (T::PI() * (T::from_usize_lossy(k) + T::lit(0.5)) / T::from_usize_lossy(n)).cos())
        .collect();
    let values = nodes.iter().map(|&x| eval_poly(poly, x)).collect::<Result<Vec<_>>>()?;
    let rows = nodes
        .iter()
        .map(|&x| basis_values(target, d, x))
        .collect::<Result<Vec<_>>>()?;
    let coeffs = Qr::new(&Mat::from_rows(&rows)).solve_lsq(&values).map_err(|e| match e {
        Error::Rank { rank, cols } => Error::Conditioning(format!(
            "basis conversion matrix numerically singular (rank {rank} of {cols})"
        )),
        other => other,
    })?;
    PolyCoeffs::new(target, coeffs)
}

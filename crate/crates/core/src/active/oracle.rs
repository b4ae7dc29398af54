//! Function oracles with query accounting.

use std::cell::Cell;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::orthopoly::{eval_poly, PolyCoeffs};
use crate::quadrature::composite_gauss_legendre;
use crate::scalar::Scalar;

/// A function on `[-1, 1]` that can be queried.
///
/// [`query`](Oracle::query) is the counted access used by fitting
/// algorithms; [`eval`](Oracle::eval) is uncounted and reserved for error
/// measurement. An oracle is meant for one caller at a time.
pub trait Oracle<T: Scalar> {
    fn eval(&self, t: T) -> T;

    fn query(&self, t: T) -> T;

    fn query_count(&self) -> usize;

    /// Points in `(-1, 1)` where the function or its derivative jumps.
    fn breakpoints(&self) -> Vec<T> {
        Vec::new()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OracleKind<T> {
    Abs,
    /// `1 / (1 + 25 t²)`.
    Runge,
    Exp,
    /// `0` for `t < 0`, `1` for `t ≥ 0`.
    Step,
    /// `height` on `[center − width/2, center + width/2]`, zero elsewhere.
    Spike { center: T, width: T, height: T },
    Poly { poly: PolyCoeffs<T> },
    /// Piecewise-linear interpolant of strictly increasing `points` covering
    /// `[-1, 1]`; queries outside the table are clamped to its range.
    Tabulated { points: Vec<T>, values: Vec<T> },
}

#[derive(Debug, Clone)]
pub struct FunctionOracle<T> {
    kind: OracleKind<T>,
    count: Cell<usize>,
}

impl<T: Scalar> FunctionOracle<T> {
    pub fn new(kind: OracleKind<T>) -> Result<Self> {
        match &kind {
            OracleKind::Spike { width, .. } if !(*width > T::zero()) => {
                return Err(Error::Parameter(format!("spike width must be positive, got {width}")));
            }
            OracleKind::Tabulated { points, values } => {
                if points.len() < 2 || points.len() != values.len() {
                    return Err(Error::Parameter("a table needs at least two (t, value) pairs".into()));
                }
                if points.windows(2).any(|w| !(w[0] < w[1])) {
                    return Err(Error::Parameter("table points must be strictly increasing".into()));
                }
                if points[0] > -T::one() || points[points.len() - 1] < T::one() {
                    return Err(Error::Parameter("table must cover [-1, 1]".into()));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Parameter("table values must be finite".into()));
                }
            }
            _ => {}
        }
        Ok(Self {
            kind,
            count: Cell::new(0),
        })
    }

    pub fn abs() -> Self {
        Self::new(OracleKind::Abs).expect("valid")
    }

    pub fn runge() -> Self {
        Self::new(OracleKind::Runge).expect("valid")
    }

    pub fn exp() -> Self {
        Self::new(OracleKind::Exp).expect("valid")
    }

    pub fn step() -> Self {
        Self::new(OracleKind::Step).expect("valid")
    }

    pub fn spike(center: T, width: T, height: T) -> Result<Self> {
        Self::new(OracleKind::Spike { center, width, height })
    }

    pub fn poly(poly: PolyCoeffs<T>) -> Self {
        Self::new(OracleKind::Poly { poly }).expect("valid")
    }

    pub fn tabulated(points: Vec<T>, values: Vec<T>) -> Result<Self> {
        Self::new(OracleKind::Tabulated { points, values })
    }

    pub fn kind(&self) -> &OracleKind<T> {
        &self.kind
    }
}

fn interpolate<T: Scalar>(points: &[T], values: &[T], t: T) -> T {
    let t = t.max(points[0]).min(points[points.len() - 1]);
    let j = points.partition_point(|&x| x <= t).clamp(1, points.len() - 1);
    let (x0, x1) = (points[j - 1], points[j]);
    let s = (t - x0) / (x1 - x0);
    values[j - 1] + s * (values[j] - values[j - 1])
}

impl<T: Scalar> Oracle<T> for FunctionOracle<T> {
    fn eval(&self, t: T) -> T {
        match &self.kind {
            OracleKind::Abs => t.abs(),
            OracleKind::Runge => T::one() / (T::one() + T::lit(25.0) * t * t),
            OracleKind::Exp => t.exp(),
            OracleKind::Step => {
                if t >= T::zero() {
                    T::one()
                } else {
                    T::zero()
                }
            }
            OracleKind::Spike { center, width, height } => {
                if (t - *center).abs() <= *width / T::lit(2.0) {
                    *height
                } else {
                    T::zero()
                }
            }
            OracleKind::Poly { poly } => eval_poly(poly, t.max(-T::one()).min(T::one())).expect("validated polynomial"),
            OracleKind::Tabulated { points, values } => interpolate(points, values, t),
        }
    }

    fn query(&self, t: T) -> T {
        self.count.set(self.count.get() + 1);
        self.eval(t)
    }

    fn query_count(&self) -> usize {
        self.count.get()
    }

    fn breakpoints(&self) -> Vec<T> {
        let inside = |v: Vec<T>| v.into_iter().filter(|t| t.abs() < T::one()).collect();
        match &self.kind {
            OracleKind::Abs | OracleKind::Step => vec![T::zero()],
            OracleKind::Spike { center, width, .. } => {
                let h = *width / T::lit(2.0);
                inside(vec![*center - h, *center + h])
            }
            OracleKind::Tabulated { points, .. } => inside(points.clone()),
            _ => Vec::new(),
        }
    }
}

/// `f − q` for a base oracle `f`; queries are counted on the base oracle.
pub struct Residual<'a, T: Scalar> {
    base: &'a dyn Oracle<T>,
    subtract: PolyCoeffs<T>,
}

impl<'a, T: Scalar> Residual<'a, T> {
    pub fn new(base: &'a dyn Oracle<T>, subtract: PolyCoeffs<T>) -> Self {
        Self { base, subtract }
    }

    fn poly_at(&self, t: T) -> T {
        eval_poly(&self.subtract, t.max(-T::one()).min(T::one())).expect("validated polynomial")
    }
}

impl<T: Scalar> Oracle<T> for Residual<'_, T> {
    fn eval(&self, t: T) -> T {
        self.base.eval(t) - self.poly_at(t)
    }

    fn query(&self, t: T) -> T {
        self.base.query(t) - self.poly_at(t)
    }

    fn query_count(&self) -> usize {
        self.base.query_count()
    }

    fn breakpoints(&self) -> Vec<T> {
        self.base.breakpoints()
    }
}

/// Panels and order of the composite rule behind [`lp_error`].
const ERROR_PANELS: usize = 64;
const ERROR_ORDER: usize = 16;
/// Grid size of the sup-norm estimate.
const SUP_GRID: usize = 20_001;

/// `‖f − q‖_p` on `[-1, 1]` from uncounted evaluations: composite
/// Gauss–Legendre split at the oracle's breakpoints for finite `p`, a dense
/// grid plus the breakpoints (and their neighbours) for `p = ∞`.
pub fn lp_error<T: Scalar>(oracle: &dyn Oracle<T>, poly: Option<&PolyCoeffs<T>>, p: T) -> Result<T> {
    let diff = |t: T| -> Result<T> {
        let q = match poly {
            Some(q) => eval_poly(q, t)?,
            None => T::zero(),
        };
        Ok((oracle.eval(t) - q).abs())
    };
    let breaks = oracle.breakpoints();
    if p.is_infinite() {
        let mut sup = T::zero();
        let step = T::lit(2.0) / T::from_usize_lossy(SUP_GRID - 1);
        for k in 0..SUP_GRID {
            sup = sup.max(diff(-T::one() + step * T::from_usize_lossy(k))?);
        }
        let eps = T::lit(1e-12);
        for &b in &breaks {
            for t in [b - eps, b, b + eps] {
                sup = sup.max(diff(t.max(-T::one()).min(T::one()))?);
            }
        }
        return Ok(sup);
    }
    if !(p >= T::one()) {
        return Err(Error::Parameter(format!("p must be at least 1, got {p}")));
    }
    let rule = composite_gauss_legendre::<T>(ERROR_PANELS, ERROR_ORDER, &breaks);
    let mut total = T::zero();
    for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
        total = total + w * diff(t)?.powf(p);
    }
    Ok(total.powf(T::one() / p))
}

/// `‖f‖_p` on `[-1, 1]`.
pub fn lp_norm<T: Scalar>(oracle: &dyn Oracle<T>, p: T) -> Result<T> {
    lp_error(oracle, None, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orthopoly::BasisKind;

    #[test]
    fn queries_are_counted_once() {
        let f = FunctionOracle::<f64>::runge();
        assert_eq!(f.query(0.2), f.eval(0.2));
        f.eval(0.1);
        assert_eq!(f.query_count(), 1);
        let q = PolyCoeffs::new(BasisKind::Monomial, vec![1.0, 1.0]).unwrap();
        let r = Residual::new(&f, q);
        assert!((r.query(0.0) - 0.0).abs() < 1e-15);
        assert_eq!(f.query_count(), 2);
        assert_eq!(r.query_count(), 2);
    }

    #[test]
    fn tabulated_interpolates_and_clamps() {
        let f = FunctionOracle::<f64>::tabulated(vec![-1.0, 0.0, 1.5], vec![2.0, 0.0, 3.0]).unwrap();
        assert!((f.eval(-0.5) - 1.0).abs() < 1e-15);
        assert!((f.eval(0.75) - 1.5).abs() < 1e-15);
        assert_eq!(f.eval(2.0), 3.0);
        assert!(FunctionOracle::tabulated(vec![-0.5, 1.0], vec![0.0, 1.0]).is_err());
        assert!(FunctionOracle::tabulated(vec![-1.0, 1.0, 0.5], vec![0.0, 1.0, 2.0]).is_err());
    }

    #[test]
    fn error_norms_of_simple_functions() {
        let f = FunctionOracle::<f64>::abs();
        // ∫(|t| − ½)² = 1/6
        let half = PolyCoeffs::new(BasisKind::Monomial, vec![0.5]).unwrap();
        assert!((lp_error(&f, Some(&half), 2.0).unwrap() - (1.0f64 / 6.0).sqrt()).abs() < 1e-13);
        assert!((lp_error(&f, Some(&half), f64::INFINITY).unwrap() - 0.5).abs() < 1e-15);
        let s = FunctionOracle::<f64>::spike(0.1, 0.01, 3.0).unwrap();
        assert!((lp_norm(&s, 1.0).unwrap() - 0.03).abs() < 1e-13);
    }
}

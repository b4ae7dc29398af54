//! Weighted ℓ_p regression `min_x ‖S (A x − b)‖_p` for `p ∈ [1, ∞]`.
//!
//! * `p = 2`: one QR least-squares solve.
//! * `1 ≤ p < ∞`: reweighted least squares on the smoothed objective
//!   `Σ (r_i² + δ²)^{p/2}`, with `δ` cut by 10 whenever progress stalls.
//!   Each step is a weighted least-squares solve whose weights are the
//!   Newton weights of the smoothed objective; a backtracking line search
//!   keeps the smoothed objective monotone.
//! * `p = ∞`: Lawson's multiplicative-weights iteration, finished by a
//!   reference exchange seeded from the Lawson weights.
//!
//! [`subgradient_oracle`] is a slow, independent reference used by tests.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{norm2, Mat, Qr};
use crate::measures::rng_for;
use crate::scalar::Scalar;

/// `min_x ‖diag(row_weights) (A x − b)‖_p`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionProblem<T> {
    pub design: Mat<T>,
    pub rhs: Vec<T>,
    pub row_weights: Vec<T>,
    pub p: T,
}

impl<T: Scalar> RegressionProblem<T> {
    pub fn new(design: Mat<T>, rhs: Vec<T>, row_weights: Vec<T>, p: T) -> Result<Self> {
        if rhs.len() != design.rows() || row_weights.len() != design.rows() {
            return Err(Error::Parameter(format!(
                "dimension mismatch: {} rows, {} rhs entries, {} weights",
                design.rows(),
                rhs.len(),
                row_weights.len()
            )));
        }
        if let Some(w) = row_weights.iter().find(|&&w| !(w > T::zero() && w.is_finite())) {
            return Err(Error::Parameter(format!("row weight {w} must be positive and finite")));
        }
        if !(p >= T::one()) {
            return Err(Error::Parameter(format!("p must be at least 1, got {p}")));
        }
        if !design.is_finite() || rhs.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parameter("non-finite problem data".into()));
        }
        Ok(Self {
            design,
            rhs,
            row_weights,
            p,
        })
    }

    pub fn unweighted(design: Mat<T>, rhs: Vec<T>, p: T) -> Result<Self> {
        let n = design.rows();
        Self::new(design, rhs, vec![T::one(); n], p)
    }

    /// Weighted residual `S (A x − b)`.
    pub fn residual(&self, x: &[T]) -> Vec<T> {
        self.design
            .mul_vec(x)
            .into_iter()
            .zip(&self.rhs)
            .zip(&self.row_weights)
            .map(|((ax, &b), &s)| s * (ax - b))
            .collect()
    }

    /// `‖S (A x − b)‖_p` (the norm, not its p-th power).
    pub fn objective(&self, x: &[T]) -> T {
        pnorm(&self.residual(x), self.p)
    }

    fn scaled(&self) -> (Mat<T>, Vec<T>) {
        let a = self.design.scale_rows(&self.row_weights);
        let b = self.rhs.iter().zip(&self.row_weights).map(|(&b, &s)| s * b).collect();
        (a, b)
    }
}

/// `‖v‖_p`, computed with scaling so large `p` does not overflow.
pub fn pnorm<T: Scalar>(v: &[T], p: T) -> T {
    let m = v.iter().fold(T::zero(), |m, x| m.max(x.abs()));
    if m == T::zero() || p.is_infinite() {
        return m;
    }
    let s: T = v.iter().map(|&x| (x.abs() / m).powf(p)).sum();
    m * s.powf(T::one() / p)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions<T> {
    pub tol: T,
    pub max_iter: usize,
    /// Initial smoothing `δ`; defaults to `1e-2 ‖S b‖_∞`.
    pub smoothing_init: Option<T>,
}

impl<T: Scalar> Default for SolveOptions<T> {
    fn default() -> Self {
        Self {
            tol: T::lit(1e-10),
            max_iter: 300,
            smoothing_init: None,
        }
    }
}

impl<T: Scalar> SolveOptions<T> {
    /// Defaults for the Lawson iteration, which converges only linearly.
    pub fn linf_default() -> Self {
        Self {
            tol: T::lit(1e-6),
            max_iter: 20_000,
            smoothing_init: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult<T> {
    pub x: Vec<T>,
    /// `‖S (A x − b)‖_p`.
    pub objective: T,
    pub iterations: usize,
    pub converged: bool,
    pub smoothing_final: T,
}

/// Solves the weighted ℓ_p regression problem.
pub fn solve<T: Scalar>(problem: &RegressionProblem<T>, opts: &SolveOptions<T>) -> Result<SolveResult<T>> {
    if problem.p.is_infinite() {
        return solve_linf(&problem.design, &problem.rhs, &problem.row_weights, opts);
    }
    let (a, b) = problem.scaled();
    let qr = Qr::new(&a);
    qr.require_full_rank()?;
    let x_ls = qr.solve_lsq(&b)?;
    let p = problem.p;
    let two = T::lit(2.0);
    if p == two {
        return Ok(SolveResult {
            objective: problem.objective(&x_ls),
            x: x_ls,
            iterations: 1,
            converged: true,
            smoothing_final: T::zero(),
        });
    }

    let scale = b.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    let exact = |x: &[T]| {
        let r = problem.residual(x);
        r.iter().fold(T::zero(), |m, v| m.max(v.abs())) <= T::epsilon() * T::lit(64.0) * scale.max(T::min_positive_value())
    };
    if scale == T::zero() || exact(&x_ls) {
        return Ok(SolveResult {
            objective: problem.objective(&x_ls),
            x: x_ls,
            iterations: 1,
            converged: true,
            smoothing_final: T::zero(),
        });
    }

    // work on the problem normalized to ‖b‖_∞ = 1
    let b: Vec<T> = b.iter().map(|&v| v / scale).collect();
    let mut x: Vec<T> = x_ls.iter().map(|&v| v / scale).collect();
    let mut delta = opts.smoothing_init.map_or(T::lit(1e-2), |d| d / scale).max(opts.tol);
    let delta_min = opts.tol;
    let half_p = p / two;

    let resid = |x: &[T]| -> Vec<T> { a.mul_vec(x).into_iter().zip(&b).map(|(ax, &bi)| ax - bi).collect() };
    let smoothed = |r: &[T], delta: T| -> T { r.iter().map(|&ri| (ri * ri + delta * delta).powf(half_p)).sum() };

    let mut best_x = x.clone();
    let mut best_obj = pnorm(&resid(&x), p);
    let mut iterations = 0;
    let mut converged = false;

    while iterations < opts.max_iter {
        iterations += 1;
        let r = resid(&x);
        let f0 = smoothed(&r, delta);
        let mut sqrt_h = Vec::with_capacity(r.len());
        let mut rhs = Vec::with_capacity(r.len());
        for &ri in &r {
            let u = ri * ri + delta * delta;
            let g = u.powf((p - two) / two) * ri;
            let h = u.powf((p - T::lit(4.0)) / two) * ((p - T::one()) * ri * ri + delta * delta);
            let sh = h.sqrt().max(T::min_positive_value().sqrt());
            sqrt_h.push(sh);
            rhs.push(-g / sh);
        }
        let step = match Qr::new(&a.scale_rows(&sqrt_h)).solve_lsq(&rhs) {
            Ok(s) => s,
            Err(_) => Vec::new(),
        };

        let mut accepted = None;
        if !step.is_empty() {
            let mut alpha = T::one();
            for _ in 0..60 {
                let trial: Vec<T> = x.iter().zip(&step).map(|(&xi, &si)| xi + alpha * si).collect();
                let f1 = smoothed(&resid(&trial), delta);
                if f1 < f0 {
                    accepted = Some((trial, f1));
                    break;
                }
                alpha = alpha / two;
            }
        }

        let stalled = match accepted {
            Some((trial, f1)) => {
                x = trial;
                let obj = pnorm(&resid(&x), p);
                if obj < best_obj {
                    best_obj = obj;
                    best_x.clone_from(&x);
                }
                (f0 - f1) <= opts.tol * f0
            }
            None => true,
        };
        if stalled {
            if delta <= delta_min {
                converged = true;
                break;
            }
            delta = (delta / T::lit(10.0)).max(delta_min);
        }
    }

    let x: Vec<T> = best_x.iter().map(|&v| v * scale).collect();
    Ok(SolveResult {
        objective: problem.objective(&x),
        x,
        iterations,
        converged,
        smoothing_final: delta * scale,
    })
}

/// Weighted discrete minimax fit `min_x max_i s_i |a_iᵀx − b_i|`.
///
/// Lawson's iteration (weighted least squares with `ω_i ← ω_i |r_i|`) runs
/// first; its weights then seed an exchange on a reference of `cols + 1`
/// rows. Both phases maintain a lower bound on the minimax value (the
/// weighted least-squares residual for Lawson, the dual objective for the
/// exchange), and the solve stops once the best maximum residual is within
/// `tol` (relative) of it.
pub fn solve_linf<T: Scalar>(
    design: &Mat<T>,
    rhs: &[T],
    row_weights: &[T],
    opts: &SolveOptions<T>,
) -> Result<SolveResult<T>> {
    let problem = RegressionProblem::new(design.clone(), rhs.to_vec(), row_weights.to_vec(), T::infinity())?;
    let (a, b) = problem.scaled();
    Qr::new(&a).require_full_rank()?;

    let mut lawson = Lawson::new(&a, &b);
    let max_iter = opts.max_iter.max(1);
    let warm = max_iter.min(LAWSON_WARM_ITERS);
    let mut converged = lawson.run(warm, opts.tol)?;
    let mut iterations = lawson.iterations;
    if !converged {
        if let Some(ex) = exchange(&a, &b, &lawson.ranking(), opts.tol, max_iter - iterations) {
            iterations += ex.iterations;
            if ex.max_residual <= lawson.best_max {
                lawson.best_max = ex.max_residual;
                lawson.best_x = ex.x;
            }
            converged = ex.converged;
        }
    }
    if !converged && iterations < max_iter {
        converged = lawson.run(max_iter - iterations, opts.tol)?;
        iterations += lawson.iterations;
    }

    Ok(SolveResult {
        objective: problem.objective(&lawson.best_x),
        x: lawson.best_x,
        iterations,
        converged,
        smoothing_final: T::zero(),
    })
}

/// Lawson iterations spent before switching to the exchange phase.
const LAWSON_WARM_ITERS: usize = 200;

struct Lawson<'a, T> {
    a: &'a Mat<T>,
    b: &'a [T],
    omega: Vec<T>,
    best_x: Vec<T>,
    best_max: T,
    lower: T,
    iterations: usize,
}

impl<'a, T: Scalar> Lawson<'a, T> {
    fn new(a: &'a Mat<T>, b: &'a [T]) -> Self {
        let n = a.rows();
        Self {
            a,
            b,
            omega: vec![T::one() / T::from_usize_lossy(n); n],
            best_x: Vec::new(),
            best_max: T::infinity(),
            lower: T::zero(),
            iterations: 0,
        }
    }

    /// Runs up to `iters` iterations; returns whether the gap closed.
    fn run(&mut self, iters: usize, tol: T) -> Result<bool> {
        let (a, b, n) = (self.a, self.b, self.a.rows());
        // rows with negligible weight do not affect the weighted solve
        let prune = T::lit(1e-14);
        let exact_level = T::epsilon() * T::lit(64.0) * b.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        self.iterations = 0;
        while self.iterations < iters {
            self.iterations += 1;
            let wmax = self.omega.iter().fold(T::zero(), |m, &w| m.max(w));
            let active: Vec<usize> = (0..n).filter(|&i| self.omega[i] >= wmax * prune).collect();
            let sw: Vec<T> = active.iter().map(|&i| self.omega[i].sqrt()).collect();
            let wb: Vec<T> = active.iter().zip(&sw).map(|(&i, &s)| b[i] * s).collect();
            let x = match Qr::new(&a.select_rows(&active).scale_rows(&sw)).solve_lsq(&wb) {
                Ok(x) => x,
                Err(Error::Rank { .. }) if !self.best_x.is_empty() => return Ok(false),
                Err(e) => return Err(e),
            };
            let r: Vec<T> = a.mul_vec(&x).into_iter().zip(b).map(|(ax, &bi)| ax - bi).collect();
            let emax = r.iter().fold(T::zero(), |m, v| m.max(v.abs()));
            let wls: T = self.omega.iter().zip(&r).map(|(&w, &ri)| w * ri * ri).sum();
            self.lower = self.lower.max(wls.sqrt());
            if emax < self.best_max {
                self.best_max = emax;
                self.best_x = x;
            }
            if self.best_max <= exact_level || self.best_max - self.lower <= tol * self.best_max {
                return Ok(true);
            }
            let mut total = T::zero();
            for (w, ri) in self.omega.iter_mut().zip(&r) {
                *w = *w * ri.abs() / emax;
                total = total + *w;
            }
            if !(total > T::zero()) {
                return Ok(false);
            }
            for w in self.omega.iter_mut() {
                *w = (*w / total).max(T::min_positive_value());
            }
        }
        Ok(false)
    }

    /// Row indices by decreasing weight.
    fn ranking(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.omega.len()).collect();
        idx.sort_by(|&i, &j| self.omega[j].partial_cmp(&self.omega[i]).unwrap_or(core::cmp::Ordering::Equal));
        idx
    }
}

struct Exchange<T> {
    x: Vec<T>,
    max_residual: T,
    iterations: usize,
    converged: bool,
}

/// Dual simplex exchange for `min_x max_i |c_iᵀx − d_i|` (rows of `c`
/// already weighted). The dual is `max Σ u_i d_i` subject to `Σ u_i c_i = 0`
/// and `Σ |u_i| = 1`; a basis is a reference of `k + 1` rows. The starting
/// reference is built greedily from `ranking`.
fn exchange<T: Scalar>(c: &Mat<T>, d: &[T], ranking: &[usize], tol: T, max_iter: usize) -> Option<Exchange<T>> {
    let k = c.cols();
    let (mut basis, mut u) = initial_reference(c, ranking)?;
    let mut best: Option<Exchange<T>> = None;
    let mut iterations = 0;
    loop {
        // primal on the reference: c_iᵀx + σ_i H = d_i
        let m = Mat::from_fn(k + 1, k + 1, |row, col| {
            let i = basis[row];
            if col < k {
                c[(i, col)]
            } else {
                u[row].signum()
            }
        });
        let rhs: Vec<T> = basis.iter().map(|&i| d[i]).collect();
        let z = Qr::new(&m).solve_lsq(&rhs).ok()?;
        let (x, h) = (z[..k].to_vec(), z[k]);
        let r: Vec<T> = c.mul_vec(&x).into_iter().zip(d).map(|(cx, &di)| cx - di).collect();
        let (j, rmax) = r
            .iter()
            .enumerate()
            .fold((0, T::zero()), |(bj, bv), (i, v)| if v.abs() > bv { (i, v.abs()) } else { (bj, bv) });
        let done = rmax <= h.abs() * (T::one() + tol) || basis.contains(&j);
        if best.as_ref().is_none_or(|e| rmax < e.max_residual) {
            best = Some(Exchange {
                x,
                max_residual: rmax,
                iterations,
                converged: false,
            });
        }
        if done || iterations >= max_iter {
            let mut out = best?;
            out.iterations = iterations;
            out.converged = done && out.max_residual <= h.abs() * (T::one() + tol);
            return Some(out);
        }
        iterations += 1;

        // entering row j with sign s = −sign(r_j); δ solves Σ δ_i c_i = −s c_j, Σ σ_i δ_i = −1
        let s = -r[j].signum();
        let mt = Mat::from_fn(k + 1, k + 1, |row, col| {
            if row < k {
                c[(basis[col], row)]
            } else {
                u[col].signum()
            }
        });
        let mut rhs: Vec<T> = (0..k).map(|col| -s * c[(j, col)]).collect();
        rhs.push(-T::one());
        let delta = Qr::new(&mt).solve_lsq(&rhs).ok()?;
        let mut leave = None;
        let mut theta = T::infinity();
        for (pos, (&ui, &di)) in u.iter().zip(&delta).enumerate() {
            if ui.signum() * di < T::zero() {
                let t = ui.abs() / di.abs();
                if t < theta {
                    theta = t;
                    leave = Some(pos);
                }
            }
        }
        let leave = leave?;
        for (ui, &di) in u.iter_mut().zip(&delta) {
            *ui = *ui + theta * di;
        }
        basis[leave] = j;
        u[leave] = s * theta;
        let total: T = u.iter().map(|v| v.abs()).sum();
        if !(total > T::zero()) {
            return best;
        }
        for ui in u.iter_mut() {
            *ui = *ui / total;
        }
    }
}

/// Picks `k` independent rows in `ranking` order, then a `(k+1)`-th row whose
/// null-space combination has no zero entry. Returns the rows and the
/// normalized dual weights, signed so the dual objective is non-negative
/// once the first primal solve fixes `H`.
fn initial_reference<T: Scalar>(c: &Mat<T>, ranking: &[usize]) -> Option<(Vec<usize>, Vec<T>)> {
    let k = c.cols();
    let mut basis: Vec<usize> = Vec::with_capacity(k + 1);
    for &i in ranking {
        let mut trial = basis.clone();
        trial.push(i);
        let sub = c.select_rows(&trial);
        if Qr::new(&sub).rank() == trial.len() {
            basis = trial;
            if basis.len() == k {
                break;
            }
        }
    }
    if basis.len() < k {
        return None;
    }
    // columns c_l, l ∈ basis: solve Σ u_l c_l = −c_i
    let cb = Mat::from_fn(k, k, |row, col| c[(basis[col], row)]);
    let qr = Qr::new(&cb);
    for &i in ranking {
        if basis.contains(&i) {
            continue;
        }
        let rhs: Vec<T> = (0..k).map(|col| -c[(i, col)]).collect();
        let Ok(ub) = qr.solve_lsq(&rhs) else { continue };
        let mut u = ub;
        u.push(T::one());
        let umax = u.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        if u.iter().all(|v| v.abs() > umax * T::lit(1e-10)) {
            let total: T = u.iter().map(|v| v.abs()).sum();
            let mut rows = basis.clone();
            rows.push(i);
            return Some((rows, u.into_iter().map(|v| v / total).collect()));
        }
    }
    None
}

/// Norm of the gradient of `Σ (r_i² + δ²)^{p/2}` divided by `p`, at `x`.
/// A stationarity diagnostic for finite `p`.
pub fn smoothed_gradient_norm<T: Scalar>(problem: &RegressionProblem<T>, x: &[T], delta: T) -> T {
    let two = T::lit(2.0);
    let (a, _) = problem.scaled();
    let g: Vec<T> = problem
        .residual(x)
        .into_iter()
        .map(|ri| (ri * ri + delta * delta).powf((problem.p - two) / two) * ri)
        .collect();
    norm2(&a.tr_mul_vec(&g))
}

/// Best objective found by normalized subgradient descent from the
/// least-squares point plus `restarts` random starts. The step size is
/// halved every `budget / 40` iterations. Test reference only.
pub fn subgradient_oracle<T: Scalar>(problem: &RegressionProblem<T>, budget: usize, restarts: usize, seed: u64) -> T {
    let (a, b) = problem.scaled();
    let k = a.cols();
    let x_ls = Qr::new(&a).solve_lsq(&b).unwrap_or_else(|_| vec![T::zero(); k]);
    let mut best = problem.objective(&x_ls);
    let radius = norm2(&x_ls).max(norm2(&b) / (norm2(a.as_slice()) + T::min_positive_value())).max(T::lit(1e-3));

    let mut rng = rng_for(seed);
    let starts = restarts + 1;
    let per_start = (budget / starts).max(1);
    let epoch = (per_start / 40).max(1);
    let p = problem.p;

    for s in 0..starts {
        let mut x: Vec<T> = if s == 0 {
            x_ls.clone()
        } else {
            x_ls.iter()
                .map(|&v| v + radius * T::lit(rng.sample::<f64, _>(StandardNormal)))
                .collect()
        };
        let mut step = radius * T::lit(0.5);
        for it in 0..per_start {
            if it > 0 && it % epoch == 0 {
                step = step / T::lit(2.0);
            }
            let r: Vec<T> = a.mul_vec(&x).into_iter().zip(&b).map(|(ax, &bi)| ax - bi).collect();
            let val = pnorm(&r, p);
            if val < best {
                best = val;
            }
            if val == T::zero() {
                break;
            }
            let coef: Vec<T> = if p.is_infinite() {
                let (imax, _) = r
                    .iter()
                    .enumerate()
                    .fold((0, T::zero()), |(bi, bv), (i, v)| if v.abs() > bv { (i, v.abs()) } else { (bi, bv) });
                let mut c = vec![T::zero(); r.len()];
                c[imax] = r[imax].signum();
                c
            } else {
                // ∇‖r‖_p = |r|^{p−1} sign(r) / ‖r‖_p^{p−1}; the scale drops out after normalizing
                r.iter()
                    .map(|&ri| {
                        if ri == T::zero() {
                            T::zero()
                        } else {
                            (ri.abs() / val).powf(p - T::one()) * ri.signum()
                        }
                    })
                    .collect()
            };
            let g = a.tr_mul_vec(&coef);
            let gn = norm2(&g);
            if gn == T::zero() {
                break;
            }
            for (xi, gi) in x.iter_mut().zip(&g) {
                *xi = *xi - step * *gi / gn;
            }
        }
    }
    best
}

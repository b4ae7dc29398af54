//! Row subsampling for ℓ_p regression with Vandermonde-like designs.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lpsolve::{pnorm, solve, RegressionProblem, SolveOptions, SolveResult};
use crate::measures::rng_for;
use crate::scalar::Scalar;
use crate::weights::DesignMatrix;

/// Rows kept by [`subsample_rows`], with their inclusion probabilities and
/// the rescaling `p_i^{−1/p}` applied to each kept row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowSample<T> {
    pub indices: Vec<usize>,
    pub probs: Vec<T>,
    pub rescales: Vec<T>,
    pub seed: u64,
}

impl<T> RowSample<T> {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Inclusion probability `min{1, (m/n₀) / √(1 − s²)}` of a row at `s`.
pub fn inclusion_probability<T: Scalar>(s: T, m: usize, n0: usize) -> T {
    let r = T::from_usize_lossy(m) / T::from_usize_lossy(n0);
    let c = (T::one() - s * s).sqrt();
    if c <= T::zero() {
        T::one()
    } else {
        (r / c).min(T::one())
    }
}

/// Keeps row `i` independently with probability `p_i` (see
/// [`inclusion_probability`]).
pub fn subsample_rows<T: Scalar>(design: &DesignMatrix<T>, m: usize, p: T, seed: u64) -> Result<RowSample<T>> {
    let points = design
        .row_points
        .as_ref()
        .ok_or_else(|| Error::Parameter("row subsampling needs the row points of the design".into()))?;
    let n0 = design.rows();
    if m == 0 || m > n0 {
        return Err(Error::Parameter(format!("need 0 < m <= rows = {n0}, got {m}")));
    }
    if !(p >= T::one()) {
        return Err(Error::Parameter(format!("p must be at least 1, got {p}")));
    }
    let mut rng = rng_for(seed);
    let mut out = RowSample {
        indices: Vec::new(),
        probs: Vec::new(),
        rescales: Vec::new(),
        seed,
    };
    for (i, &s) in points.iter().enumerate() {
        let pi = inclusion_probability(s, m, n0);
        let u: f64 = rng.random();
        if T::lit(u) < pi {
            out.indices.push(i);
            out.probs.push(pi);
            out.rescales.push(pi.powf(-T::one() / p));
        }
    }
    Ok(out)
}

/// `‖S (A x − b)‖_p^p` over the kept rows.
pub fn subsampled_objective_pow<T: Scalar>(design: &DesignMatrix<T>, b: &[T], x: &[T], sample: &RowSample<T>, p: T) -> T {
    sample
        .indices
        .iter()
        .zip(&sample.rescales)
        .map(|(&i, &s)| {
            let r: T = design.matrix.row(i).iter().zip(x).map(|(&a, &xi)| a * xi).sum::<T>() - b[i];
            (s * r).abs().powf(p)
        })
        .sum()
}

/// Result of a subsampled matrix regression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixFit<T> {
    pub x: Vec<T>,
    pub stage_results: Vec<SolveResult<T>>,
    pub samples: Vec<RowSample<T>>,
}

fn subsampled_stage<T: Scalar>(
    design: &DesignMatrix<T>,
    b: &[T],
    p: T,
    m: usize,
    seed: u64,
) -> Result<(SolveResult<T>, RowSample<T>)> {
    let mut last_err = None;
    for s in [seed, seed.wrapping_add(1)] {
        let sample = subsample_rows(design, m, p, s)?;
        if sample.len() < design.cols() {
            last_err = Some(Error::Rank {
                rank: sample.len(),
                cols: design.cols(),
            });
            continue;
        }
        let problem = RegressionProblem::new(
            design.matrix.select_rows(&sample.indices),
            sample.indices.iter().map(|&i| b[i]).collect(),
            sample.rescales.clone(),
            p,
        )?;
        match solve(&problem, &SolveOptions::default()) {
            Ok(res) => return Ok((res, sample)),
            Err(e @ Error::Rank { .. }) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last_err.expect("at least one attempt"))
}

/// Constant-factor subsampled regression: one round of [`subsample_rows`]
/// and a weighted solve on the kept rows.
pub fn matrix_fit_constant<T: Scalar>(design: &DesignMatrix<T>, b: &[T], p: T, m: usize, seed: u64) -> Result<MatrixFit<T>> {
    if b.len() != design.rows() {
        return Err(Error::Parameter("right-hand side length differs from the row count".into()));
    }
    let (res, sample) = subsampled_stage(design, b, p, m, seed)?;
    Ok(MatrixFit {
        x: res.x.clone(),
        stage_results: vec![res],
        samples: vec![sample],
    })
}

/// Relative-error subsampled regression: a constant-factor round with
/// budget `m/2` gives `x_c`; a second round on `z = b − A x_c` gives `x̂`;
/// returns `x_c + x̂`.
pub fn matrix_fit_relative<T: Scalar>(design: &DesignMatrix<T>, b: &[T], p: T, m: usize, seed: u64) -> Result<MatrixFit<T>> {
    if b.len() != design.rows() {
        return Err(Error::Parameter("right-hand side length differs from the row count".into()));
    }
    let half = (m / 2).max(1);
    let (r1, s1) = subsampled_stage(design, b, p, half, seed)?;
    let ax = design.matrix.mul_vec(&r1.x);
    let z: Vec<T> = b.iter().zip(&ax).map(|(&bi, &ai)| bi - ai).collect();
    let (r2, s2) = subsampled_stage(design, &z, p, m - half, super::fit::second_stage_seed(seed))?;
    let x = r1.x.iter().zip(&r2.x).map(|(&a, &c)| a + c).collect();
    Ok(MatrixFit {
        x,
        stage_results: vec![r1, r2],
        samples: vec![s1, s2],
    })
}

/// `‖A x − b‖_p` over all rows.
pub fn full_objective<T: Scalar>(design: &DesignMatrix<T>, b: &[T], x: &[T], p: T) -> T {
    let r: Vec<T> = design.matrix.mul_vec(x).into_iter().zip(b).map(|(a, &bi)| a - bi).collect();
    pnorm(&r, p)
}

//! Small dense linear algebra: row-major matrices, column-pivoted Householder
//! QR for least squares and leverage scores, and Cholesky for Gram matrices.
//!
//! Problem sizes in this crate are tall and thin (at most a few tens of
//! columns), so everything is written for clarity over blocking.

use core::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Mat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { T::one() } else { T::zero() })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from row vectors. Panics on ragged input.
    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend_from_slice(r);
        }
        Self {
            rows: rows.len(),
            cols,
            data,
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    /// Returns `diag(s) * self`.
    pub fn scale_rows(&self, s: &[T]) -> Self {
        assert_eq!(s.len(), self.rows);
        let mut out = self.clone();
        for (i, &si) in s.iter().enumerate() {
            for v in &mut out.data[i * self.cols..(i + 1) * self.cols] {
                *v = *v * si;
            }
        }
        out
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| dot(self.row(i), x))
            .collect()
    }

    /// `selfᵀ y`.
    pub fn tr_mul_vec(&self, y: &[T]) -> Vec<T> {
        assert_eq!(y.len(), self.rows);
        let mut out = vec![T::zero(); self.cols];
        for (i, &yi) in y.iter().enumerate() {
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o = *o + a * yi;
            }
        }
        out
    }

    pub fn mul_mat(&self, other: &Mat<T>) -> Mat<T> {
        assert_eq!(self.cols, other.rows);
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] = out[(i, j)] + a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Self {
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

impl<T> Index<(usize, usize)> for Mat<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Mat<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

#[inline]
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

/// Euclidean norm with scaling against overflow.
pub fn norm2<T: Scalar>(v: &[T]) -> T {
    let scale = v.iter().fold(T::zero(), |m, x| m.max(x.abs()));
    if scale == T::zero() || !scale.is_finite() {
        return scale;
    }
    let ss: T = v.iter().map(|&x| (x / scale) * (x / scale)).sum();
    scale * ss.sqrt()
}

/// Householder QR with column pivoting, `A P = Q R`.
#[derive(Debug, Clone)]
pub struct Qr<T> {
    m: usize,
    n: usize,
    /// Column-major copy; upper triangle holds R after factorization.
    a: Vec<Vec<T>>,
    /// Householder vectors for each step (length m - k).
    vs: Vec<Vec<T>>,
    betas: Vec<T>,
    perm: Vec<usize>,
}

impl<T: Scalar> Qr<T> {
    pub fn new(mat: &Mat<T>) -> Self {
        let (m, n) = (mat.rows(), mat.cols());
        let mut a: Vec<Vec<T>> = (0..n).map(|j| (0..m).map(|i| mat[(i, j)]).collect()).collect();
        let steps = m.min(n);
        let mut vs = Vec::with_capacity(steps);
        let mut betas = Vec::with_capacity(steps);
        let mut perm: Vec<usize> = (0..n).collect();

        for k in 0..steps {
            // pivot on the largest remaining column norm
            let mut best = k;
            let mut best_norm = -T::one();
            for (j, col) in a.iter().enumerate().skip(k) {
                let nj = norm2(&col[k..]);
                if nj > best_norm {
                    best_norm = nj;
                    best = j;
                }
            }
            a.swap(k, best);
            perm.swap(k, best);

            let x = &a[k][k..];
            let xnorm = norm2(x);
            let mut v = x.to_vec();
            let beta;
            if xnorm == T::zero() {
                beta = T::zero();
            } else {
                let alpha = if x[0] >= T::zero() { -xnorm } else { xnorm };
                v[0] = v[0] - alpha;
                let vtv = dot(&v, &v);
                beta = if vtv == T::zero() { T::zero() } else { T::lit(2.0) / vtv };
            }
            for col in a.iter_mut().skip(k) {
                apply_reflector(&v, beta, &mut col[k..]);
            }
            vs.push(v);
            betas.push(beta);
        }
        Self { m, n, a, vs, betas, perm }
    }

    pub fn rows(&self) -> usize {
        self.m
    }

    pub fn cols(&self) -> usize {
        self.n
    }

    /// Absolute values of the diagonal of R, non-increasing up to rounding.
    pub fn r_diag(&self) -> Vec<T> {
        (0..self.m.min(self.n)).map(|k| self.a[k][k].abs()).collect()
    }

    /// Numerical rank with the usual `max(m, n) * eps * |R_00|` threshold.
    pub fn rank(&self) -> usize {
        let diag = self.r_diag();
        let Some(&r0) = diag.first() else { return 0 };
        if r0 == T::zero() {
            return 0;
        }
        let thresh = r0 * T::epsilon() * T::from_usize_lossy(self.m.max(self.n));
        diag.iter().take_while(|&&d| d > thresh).count()
    }

    pub fn require_full_rank(&self) -> Result<()> {
        let rank = self.rank();
        if rank < self.n {
            Err(Error::Rank { rank, cols: self.n })
        } else {
            Ok(())
        }
    }

    /// Least-squares solution of `min ‖A x − b‖₂`. Requires full column rank.
    pub fn solve_lsq(&self, b: &[T]) -> Result<Vec<T>> {
        assert_eq!(b.len(), self.m);
        self.require_full_rank()?;
        let mut y = b.to_vec();
        for (k, (v, &beta)) in self.vs.iter().zip(&self.betas).enumerate() {
            apply_reflector(v, beta, &mut y[k..]);
        }
        let n = self.n;
        let mut z = vec![T::zero(); n];
        for k in (0..n).rev() {
            let mut s = y[k];
            for (j, zj) in z.iter().enumerate().skip(k + 1) {
                s = s - self.a[j][k] * *zj;
            }
            z[k] = s / self.a[k][k];
        }
        let mut x = vec![T::zero(); n];
        for (k, &p) in self.perm.iter().enumerate() {
            x[p] = z[k];
        }
        Ok(x)
    }

    /// First `n` columns of Q as an `m × n` matrix.
    pub fn thin_q(&self) -> Mat<T> {
        let (m, n) = (self.m, self.n.min(self.m));
        let mut q = Mat::zeros(m, n);
        let mut e = vec![T::zero(); m];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = T::zero());
            e[j] = T::one();
            for k in (0..self.vs.len()).rev() {
                apply_reflector(&self.vs[k], self.betas[k], &mut e[k..]);
            }
            for i in 0..m {
                q[(i, j)] = e[i];
            }
        }
        q
    }
}

#[inline]
fn apply_reflector<T: Scalar>(v: &[T], beta: T, x: &mut [T]) {
    if beta == T::zero() {
        return;
    }
    let s = beta * dot(v, x);
    for (xi, &vi) in x.iter_mut().zip(v) {
        *xi = *xi - s * vi;
    }
}

/// Cholesky factor `G = L Lᵀ` of a symmetric positive definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky<T> {
    l: Mat<T>,
}

impl<T: Scalar> Cholesky<T> {
    pub fn new(g: &Mat<T>) -> Result<Self> {
        let n = g.rows();
        assert_eq!(n, g.cols());
        let mut l = Mat::zeros(n, n);
        let scale = (0..n).fold(T::zero(), |m, i| m.max(g[(i, i)].abs()));
        for j in 0..n {
            let mut d = g[(j, j)];
            for k in 0..j {
                d = d - l[(j, k)] * l[(j, k)];
            }
            if !(d > scale * T::epsilon() * T::from_usize_lossy(n)) {
                return Err(Error::Conditioning(format!(
                    "Gram matrix not numerically positive definite at pivot {j} (value {d:e})"
                )));
            }
            let djj = d.sqrt();
            l[(j, j)] = djj;
            for i in (j + 1)..n {
                let mut s = g[(i, j)];
                for k in 0..j {
                    s = s - l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / djj;
            }
        }
        Ok(Self { l })
    }

    /// `L⁻¹ b` by forward substitution.
    pub fn solve_lower(&self, b: &[T]) -> Vec<T> {
        let n = self.l.rows();
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s = s - self.l[(i, k)] * y[k];
            }
            y[i] = s / self.l[(i, i)];
        }
        y
    }

    /// `rᵀ G⁻¹ r`.
    pub fn inv_quad_form(&self, r: &[T]) -> T {
        let y = self.solve_lower(r);
        dot(&y, &y)
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.l.rows();
        let mut y = self.solve_lower(b);
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s = s - self.l[(k, i)] * y[k];
            }
            y[i] = s / self.l[(i, i)];
        }
        y
    }
}

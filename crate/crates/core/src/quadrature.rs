//! Quadrature rules on `[-1, 1]`.

use crate::scalar::Scalar;

/// Nodes and weights of a quadrature rule.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule<T> {
    pub nodes: Vec<T>,
    pub weights: Vec<T>,
}

impl<T: Scalar> Rule<T> {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, mut f: impl FnMut(T) -> T) -> T {
        self.nodes
            .iter()
            .zip(&self.weights)
            .fold(T::zero(), |acc, (&x, &w)| acc + w * f(x))
    }
}

/// `n`-point Gauss–Legendre rule on `[-1, 1]` (Newton iteration on the
/// three-term recurrence, computed in `f64`).
pub fn gauss_legendre<T: Scalar>(n: usize) -> Rule<T> {
    let mut nodes = vec![0.0f64; n];
    let mut weights = vec![0.0f64; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (core::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else if n == 1 { x } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = nf * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = x;
        weights[i] = w;
        nodes[n - 1 - i] = -x;
        weights[n - 1 - i] = w;
    }
    Rule {
        nodes: nodes.into_iter().rev().map(T::lit).collect(),
        weights: weights.into_iter().rev().map(T::lit).collect(),
    }
}

/// Gauss–Chebyshev (first kind) rule: `∫ g(s) / √(1 − s²) ds ≈ Σ wₖ g(sₖ)`
/// with `sₖ = cos θₖ`, `θₖ = π(k + ½)/n` and equal weights `π/n`.
///
/// Multiplying an integrand by `√(1 − s²)` turns this into the midpoint rule
/// in `θ`, which absorbs endpoint singularities of the Chebyshev type.
pub fn gauss_chebyshev<T: Scalar>(n: usize) -> Rule<T> {
    let w = T::PI() / T::from_usize_lossy(n);
    let nodes = (0..n)
        .map(|k| (T::PI() * (T::from_usize_lossy(k) + T::lit(0.5)) / T::from_usize_lossy(n)).cos())
        .collect();
    Rule {
        nodes,
        weights: vec![w; n],
    }
}

/// Composite Gauss–Legendre rule on `[-1, 1]`: `panels` equal panels, further
/// split at every breakpoint strictly inside the interval, `order` nodes each.
pub fn composite_gauss_legendre<T: Scalar>(panels: usize, order: usize, breakpoints: &[T]) -> Rule<T> {
    let mut edges: Vec<T> = (0..=panels)
        .map(|k| -T::one() + T::lit(2.0) * T::from_usize_lossy(k) / T::from_usize_lossy(panels))
        .collect();
    edges.extend(breakpoints.iter().copied().filter(|b| b.abs() < T::one()));
    edges.sort_by(|a, b| a.partial_cmp(b).expect("finite breakpoints"));
    edges.dedup_by(|a, b| (*a - *b).abs() <= T::epsilon() * T::lit(4.0));

    let base = gauss_legendre::<T>(order);
    let mut nodes = Vec::with_capacity((edges.len() - 1) * order);
    let mut weights = Vec::with_capacity(nodes.capacity());
    for win in edges.windows(2) {
        let (a, b) = (win[0], win[1]);
        let half = (b - a) / T::lit(2.0);
        let mid = (a + b) / T::lit(2.0);
        for (&x, &w) in base.nodes.iter().zip(&base.weights) {
            nodes.push(mid + half * x);
            weights.push(half * w);
        }
    }
    Rule { nodes, weights }
}

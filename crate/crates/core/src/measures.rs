//! Sampling measures on `[-1, 1]`: uniform, the Chebyshev density
//! `v(t) = (d + 1) / (π √(1 − t²))` and its clipped variant
//! `w(t) = min{C (d + 1)², v(t)}`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Default clip constant `C` of the clipped Chebyshev measure.
pub const DEFAULT_CLIP: f64 = 1.0;

/// Sampled points are kept at least this far from `±1`.
pub const ENDPOINT_GUARD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeasureKind<T> {
    Uniform,
    Chebyshev,
    ClippedChebyshev { clip: T },
}

/// A measure on `[-1, 1]` attached to a polynomial degree `d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureSpec<T> {
    pub kind: MeasureKind<T>,
    pub degree: usize,
}

impl<T: Scalar> MeasureSpec<T> {
    pub fn uniform(degree: usize) -> Self {
        Self {
            kind: MeasureKind::Uniform,
            degree,
        }
    }

    pub fn chebyshev(degree: usize) -> Self {
        Self {
            kind: MeasureKind::Chebyshev,
            degree,
        }
    }

    /// Clipped Chebyshev measure; the clip constant must exceed `1/π`.
    pub fn clipped(degree: usize, clip: T) -> Result<Self> {
        if !(clip > T::FRAC_1_PI()) {
            return Err(Error::Parameter(format!("clip constant must exceed 1/pi, got {clip}")));
        }
        Ok(Self {
            kind: MeasureKind::ClippedChebyshev { clip },
            degree,
        })
    }

    pub fn density(&self, t: T) -> Result<T> {
        density(self, t)
    }

    /// Half-width of the region where the clipped measure equals the
    /// Chebyshev density, `√(1 − 1/(π² (d+1)² C²))`. Returns 1 for the
    /// unclipped kinds.
    pub fn mid_region_half_width(&self) -> T {
        match self.kind {
            MeasureKind::ClippedChebyshev { clip } => {
                let k = T::PI() * T::from_usize_lossy(self.degree + 1) * clip;
                (T::one() - T::one() / (k * k)).sqrt()
            }
            _ => T::one(),
        }
    }
}

/// Point density of the measure at `t`, `|t| < 1`.
pub fn density<T: Scalar>(spec: &MeasureSpec<T>, t: T) -> Result<T> {
    if !(t.abs() < T::one()) {
        return Err(Error::domain(t, "(-1, 1)"));
    }
    let dp1 = T::from_usize_lossy(spec.degree + 1);
    let cheb = || dp1 / (T::PI() * (T::one() - t * t).sqrt());
    Ok(match spec.kind {
        MeasureKind::Uniform => T::lit(0.5),
        MeasureKind::Chebyshev => cheb(),
        MeasureKind::ClippedChebyshev { clip } => (clip * dp1 * dp1).min(cheb()),
    })
}

/// CDF of the unit Chebyshev (arcsine) density, `arcsin(t)/π + ½`.
pub fn cdf_chebyshev<T: Scalar>(t: T) -> T {
    let t = t.max(-T::one()).min(T::one());
    t.asin() / T::PI() + T::lit(0.5)
}

/// Query points with their observations, inclusion probabilities and the
/// diagonal rescaling applied to each row of the regression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet<T> {
    pub points: Vec<T>,
    pub values: Vec<T>,
    pub probs: Vec<T>,
    pub rescales: Vec<T>,
    pub seed: u64,
}

impl<T: Scalar> SampleSet<T> {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Checks the length and range invariants.
    pub fn validate(&self) -> Result<()> {
        let n = self.points.len();
        if self.probs.len() != n || self.rescales.len() != n || !(self.values.is_empty() || self.values.len() == n) {
            return Err(Error::Parameter("sample set columns have inconsistent lengths".into()));
        }
        if let Some(t) = self.points.iter().find(|t| !(t.abs() < T::one())) {
            return Err(Error::domain(*t, "(-1, 1)"));
        }
        if let Some(p) = self.probs.iter().find(|&&p| !(p > T::zero() && p <= T::one())) {
            return Err(Error::Parameter(format!("inclusion probability {p} outside (0, 1]")));
        }
        Ok(())
    }
}

pub(crate) fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn guard<T: Scalar>(t: T) -> T {
    let lim = T::one() - T::lit(ENDPOINT_GUARD);
    t.max(-lim).min(lim)
}

/// Draws `n` independent points from the measure. Probabilities and rescales
/// are left at 1 for the caller to assign.
pub fn sample<T: Scalar>(spec: &MeasureSpec<T>, n: usize, seed: u64) -> Result<SampleSet<T>> {
    if n == 0 {
        return Err(Error::Parameter("sample size must be positive".into()));
    }
    let mut rng = rng_for(seed);
    let mut points = Vec::with_capacity(n);
    while points.len() < n {
        let u: f64 = rng.random();
        let t = match spec.kind {
            MeasureKind::Uniform => guard(T::lit(2.0 * u - 1.0)),
            MeasureKind::Chebyshev => guard(T::lit((core::f64::consts::PI * u).cos())),
            MeasureKind::ClippedChebyshev { .. } => {
                // rejection from the Chebyshev density with acceptance w/v
                let t = guard(T::lit((core::f64::consts::PI * u).cos()));
                let accept = density(spec, t)? / density(&MeasureSpec::chebyshev(spec.degree), t)?;
                let a: f64 = rng.random();
                if T::lit(a) >= accept {
                    continue;
                }
                t
            }
        };
        points.push(t);
    }
    Ok(SampleSet {
        points,
        values: Vec::new(),
        probs: vec![T::one(); n],
        rescales: vec![T::one(); n],
        seed,
    })
}

/// Acceptance mass `q = ½ ∫ min{1, (m/n₀)/√(1 − s²)} ds` of the two-stage
/// scheme (uniform draws thinned by the Chebyshev density).
pub fn two_stage_acceptance_mass(n0: usize, m: usize) -> f64 {
    let r = m as f64 / n0 as f64;
    if r >= 1.0 {
        return 1.0;
    }
    let a = (1.0 - r * r).sqrt();
    r * a.asin() + 1.0 - a
}

/// Number of survivors of the two-stage scheme: `n ~ Binomial(n₀, q)`.
pub fn sample_count_two_stage(n0: usize, m: usize, seed: u64) -> Result<usize> {
    if n0 == 0 || m == 0 || m > n0 {
        return Err(Error::Parameter(format!("need 0 < m <= n0, got m={m}, n0={n0}")));
    }
    let q = two_stage_acceptance_mass(n0, m);
    let dist = Binomial::new(n0 as u64, q).map_err(|e| Error::Parameter(e.to_string()))?;
    Ok(dist.sample(&mut rng_for(seed)) as usize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    #[test]
    fn density_examples() {
        let v0 = density(&MeasureSpec::chebyshev(0), 0.0).unwrap();
        assert!((v0 - 1.0 / PI).abs() < 1e-15);
        let w = MeasureSpec::clipped(6, 1.0).unwrap();
        assert_eq!(density(&w, 0.999999).unwrap(), 49.0);
        assert!(density(&MeasureSpec::chebyshev(3), 1.0).is_err());
        assert!(MeasureSpec::clipped(3, 0.3).is_err());
        assert_eq!(density(&MeasureSpec::uniform(4), 0.3).unwrap(), 0.5);
    }

    #[test]
    fn chebyshev_density_integrates_to_degree_plus_one() {
        // t = cos θ: ∫ v dt = ∫ v(cos θ) sin θ dθ
        for d in [0usize, 1, 5, 20] {
            let spec = MeasureSpec::chebyshev(d);
            let n = 4000;
            let total: f64 = (0..n)
                .map(|k| {
                    let th = PI * (k as f64 + 0.5) / n as f64;
                    density(&spec, th.cos()).unwrap() * th.sin() * PI / n as f64
                })
                .sum();
            assert!((total - (d + 1) as f64).abs() < 1e-4, "d={d}: {total}");
        }
    }

    #[test]
    fn clipped_below_chebyshev_with_equality_on_mid_region() {
        let d = 6;
        let w = MeasureSpec::clipped(d, 1.0).unwrap();
        let v = MeasureSpec::chebyshev(d);
        let edge = w.mid_region_half_width();
        for k in 1..2000 {
            let t = -1.0 + 2.0 * k as f64 / 2000.0;
            let (wt, vt) = (density(&w, t).unwrap(), density(&v, t).unwrap());
            assert!(wt <= vt);
            if t.abs() < edge - 1e-9 {
                assert_eq!(wt, vt);
            } else if t.abs() > edge + 1e-9 {
                assert!(wt < vt);
            }
        }
    }

    #[test]
    fn cdf_examples() {
        assert_eq!(cdf_chebyshev(0.0), 0.5);
        assert_eq!(cdf_chebyshev(1.0), 1.0);
        assert!((cdf_chebyshev((3.0 * PI / 4.0).cos()) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn chebyshev_sampling_matches_cdf() {
        let s = sample(&MeasureSpec::<f64>::chebyshev(3), 100_000, 7).unwrap();
        let mut pts = s.points.clone();
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = pts.len() as f64;
        let ks = pts.iter().enumerate().fold(0.0f64, |m, (i, &t)| {
            let f = cdf_chebyshev(t);
            m.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs())
        });
        assert!(ks < 0.02, "KS {ks}");
        s.validate().unwrap();
    }

    #[test]
    fn uniform_sampling_is_centered_and_deterministic() {
        let a = sample(&MeasureSpec::<f64>::uniform(0), 100_000, 7).unwrap();
        let mean = a.points.iter().sum::<f64>() / a.len() as f64;
        assert!(mean.abs() < 0.02);
        let b = sample(&MeasureSpec::<f64>::uniform(0), 100_000, 7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn clipped_sampling_stays_inside() {
        let s = sample(&MeasureSpec::clipped(2, 0.5).unwrap(), 5000, 3).unwrap();
        s.validate().unwrap();
        assert_eq!(s.len(), 5000);
    }

    #[test]
    fn acceptance_mass_matches_quadrature() {
        for (n0, m) in [(1000usize, 10usize), (500, 400), (10, 10), (7, 3)] {
            let r = m as f64 / n0 as f64;
            // ½∫min{1, r/√(1−s²)} ds = ½∫₀^π min{sin θ, r} dθ
            let n = 400_000;
            let quad: f64 = (0..n)
                .map(|k| (PI * (k as f64 + 0.5) / n as f64).sin().min(r))
                .sum::<f64>()
                * PI
                / n as f64
                / 2.0;
            assert!((two_stage_acceptance_mass(n0, m) - quad).abs() < 1e-8, "{n0} {m}");
        }
    }

    #[test]
    fn two_stage_count_matches_literal_process() {
        let (n0, m) = (1000usize, 10usize);
        let trials = 10_000u64;
        let mean = (0..trials)
            .map(|s| sample_count_two_stage(n0, m, s).unwrap() as f64)
            .sum::<f64>()
            / trials as f64;
        let target = 10.0 * PI / 2.0;
        assert!((mean - target).abs() < 0.05 * target, "{mean}");

        // literal accept/reject over uniform draws
        let mut rng = rng_for(99);
        let mut total = 0usize;
        for _ in 0..2000 {
            for _ in 0..n0 {
                let s: f64 = 2.0 * rng.random::<f64>() - 1.0;
                let keep = (m as f64 / n0 as f64 / (1.0 - s * s).sqrt()).min(1.0);
                if rng.random::<f64>() < keep {
                    total += 1;
                }
            }
        }
        let literal = total as f64 / 2000.0;
        assert!((literal - mean).abs() < 0.05 * target, "{literal} vs {mean}");
    }

    #[test]
    fn two_stage_count_in_support() {
        for seed in 0..200 {
            let n = sample_count_two_stage(50, 50, seed).unwrap();
            assert!(n <= 50);
        }
        assert_eq!(two_stage_acceptance_mass(5, 5), 1.0);
        assert!(sample_count_two_stage(5, 6, 0).is_err());
    }
}

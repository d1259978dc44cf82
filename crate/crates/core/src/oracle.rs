//! Brute-force validators for the variance model. Diagnostic, not used by
//! the estimators themselves.
//!
//! - [`mc_moments_of_c`] simulates the signed slope count `C̃` directly and
//!   returns its sample moments with standard errors.
//! - [`brute_force_q`] estimates the overlap fractions `q[k][u]` by sampling
//!   error triplets.
//! - [`transform_check`] verifies pair by pair that the sign of `S - β`
//!   equals the sign of the slope in sheared coordinates.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dataset::GroupedDataset;
use crate::error::Result;
use crate::simulation::{generate_dataset, ErrorDist, Scenario};
use crate::slopes::{count_signs, enumerate_slopes, RegressionMode};
use crate::variance::{QMatrix, QSource};

/// Sample moments of `C̃` over Monte Carlo replicates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CMoments {
    pub replicates: usize,
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    pub se_mean: f64,
    /// Jackknife standard error of `variance`.
    pub se_variance: f64,
}

impl CMoments {
    /// Moments of an arbitrary sample.
    pub fn from_sample(values: &[f64]) -> Self {
        let n = values.len();
        assert!(n >= 3, "need at least three values");
        let nf = n as f64;
        let mean = values.iter().sum::<f64>() / nf;
        let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
        for &v in values {
            let d = v - mean;
            let d2 = d * d;
            m2 += d2;
            m3 += d2 * d;
            m4 += d2 * d2;
        }
        let (m2, m3, m4) = (m2 / nf, m3 / nf, m4 / nf);
        let variance = m2 * nf / (nf - 1.0);
        Self {
            replicates: n,
            mean,
            variance,
            skewness: m3 / m2.powf(1.5),
            excess_kurtosis: m4 / (m2 * m2) - 3.0,
            se_mean: (variance / nf).sqrt(),
            se_variance: jackknife_se_variance(values, mean),
        }
    }
}

/// Jackknife standard error of the unbiased sample variance, using the
/// closed form of each leave-one-out variance.
fn jackknife_se_variance(values: &[f64], mean: f64) -> f64 {
    let n = values.len() as f64;
    // centred sums keep the leave-one-out updates well conditioned
    let s1: f64 = values.iter().map(|v| v - mean).sum();
    let s2: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    let loo = |v: f64| {
        let d = v - mean;
        let k = n - 1.0;
        let sum = s1 - d;
        let sq = s2 - d * d;
        (sq - sum * sum / k) / (k - 1.0)
    };
    let avg = values.iter().map(|&v| loo(v)).sum::<f64>() / n;
    let ss: f64 = values.iter().map(|&v| (loo(v) - avg).powi(2)).sum();
    ((n - 1.0) / n * ss).sqrt()
}

/// `C̃ = P(β) - Q(β)` of the block-mode slopes of `ds`.
pub fn c_tilde(ds: &GroupedDataset, beta_true: f64) -> Result<i64> {
    let ss = enumerate_slopes(ds, RegressionMode::Block)?;
    Ok(count_signs(&ss, beta_true).c_tilde)
}

/// Simulates `C̃` at the true slope over `replicates` datasets drawn from `sc`
/// (replicate `r` uses the same stream as in the simulation harness).
pub fn mc_moments_of_c(sc: &Scenario, beta_true: f64, replicates: usize) -> Result<CMoments> {
    let values: Vec<f64> = (0..replicates as u64)
        .into_par_iter()
        .map(|r| c_tilde(&generate_dataset(sc, r), beta_true).map(|c| c as f64))
        .collect::<Result<_>>()?;
    Ok(CMoments::from_sample(&values))
}

/// Monte Carlo estimate of `q[k][u]`.
///
/// `true_x[k]` lists the true x-values of the points of group `k`; a single
/// entry is shared by every point of the group. Each draw picks two distinct
/// points of group `k` and one point of group `u`, adds independent errors to
/// all three and tests whether the `u` point lies strictly between the pair.
/// Each ordered pair `(k, u)` uses its own random stream derived from `seed`.
pub fn brute_force_q(
    true_x: &[Vec<f64>],
    error_dist: ErrorDist,
    sigma: f64,
    samples: usize,
    seed: u64,
) -> QMatrix {
    let m = true_x.len();
    assert!(true_x.iter().all(|g| !g.is_empty()), "every group needs a true value");
    let pairs: Vec<(usize, usize)> = (0..m)
        .flat_map(|k| (0..m).filter(move |&u| u != k).map(move |u| (k, u)))
        .collect();
    let fractions: Vec<f64> = pairs
        .par_iter()
        .map(|&(k, u)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream((k * m + u) as u64);
            let (gk, gu) = (&true_x[k], &true_x[u]);
            let mut hits = 0usize;
            for _ in 0..samples {
                let (ia, ib) = match gk.len() {
                    1 => (0, 0),
                    len => {
                        let ia = rng.random_range(0..len);
                        let ib = (ia + rng.random_range(1..len)) % len;
                        (ia, ib)
                    }
                };
                let iu = if gu.len() == 1 { 0 } else { rng.random_range(0..gu.len()) };
                let a = gk[ia] + error_dist.sample(&mut rng, sigma);
                let b = gk[ib] + error_dist.sample(&mut rng, sigma);
                let s = gu[iu] + error_dist.sample(&mut rng, sigma);
                if a.min(b) < s && s < a.max(b) {
                    hits += 1;
                }
            }
            hits as f64 / samples as f64
        })
        .collect();
    let mut q = QMatrix::zeros(m);
    q.source = QSource::MonteCarlo;
    for (&(k, u), &f) in pairs.iter().zip(&fractions) {
        q.set(k, u, f);
    }
    q
}

/// [`brute_force_q`] for one true value per group.
pub fn brute_force_q_scalar(
    true_x: &[f64],
    error_dist: ErrorDist,
    sigma: f64,
    samples: usize,
    seed: u64,
) -> QMatrix {
    let lists: Vec<Vec<f64>> = true_x.iter().map(|&x| vec![x]).collect();
    brute_force_q(&lists, error_dist, sigma, samples, seed)
}

/// Checks, for every cross-group pair with distinct points, that
/// `sign(S - β)` equals `sign(β) · sign(S')`, where `S'` is the slope of the
/// pair in the coordinates `(β x, y - β x)`.
///
/// The shear makes both error terms identically distributed, so the sign of
/// `S'` alone decides whether a pair counts above or below `β`.
/// Returns `false` for `β = 0` or non-finite `β`.
pub fn transform_check(ds: &GroupedDataset, beta: f64) -> bool {
    if beta == 0.0 || !beta.is_finite() {
        return false;
    }
    let pts = ds.points();
    let sign = |v: f64| (v > 0.0) as i8 - (v < 0.0) as i8;
    for (a, pa) in pts.iter().enumerate() {
        for pb in &pts[a + 1..] {
            if pa.group == pb.group || (pa.x == pb.x && pa.y == pb.y) {
                continue;
            }
            let dx = pb.x - pa.x;
            let dy = pb.y - pa.y;
            let direct = if dx == 0.0 {
                sign(dy)
            } else {
                sign(dy / dx - beta)
            };
            let tx = beta * pb.x - beta * pa.x;
            let ty = (pb.y - beta * pb.x) - (pa.y - beta * pa.x);
            let sheared = if tx == 0.0 { sign(ty) } else { sign(ty / tx) };
            let expected = if dx == 0.0 { sheared } else { sign(beta) * sheared };
            if direct != expected {
                return false;
            }
        }
    }
    true
}

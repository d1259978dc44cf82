//! Point estimates: shifted median slope and median-residual intercept.

use serde::Serialize;

use crate::dataset::GroupedDataset;
use crate::error::{Error, Result};
use crate::slopes::{enumerate_slopes_with, RegressionMode, SlopeOptions, SlopeSet};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointEstimate {
    pub beta_hat: f64,
    pub alpha_hat: f64,
    /// Retained slope count `N`.
    pub n_slopes: usize,
    /// Offset `K`.
    pub offset: usize,
    pub mode: RegressionMode,
}

/// Median of `values` (midpoint of the two central values for even length).
///
/// Panics on an empty slice.
pub fn median(values: &mut [f64]) -> f64 {
    assert!(!values.is_empty(), "median of an empty slice");
    let n = values.len();
    let mid = n / 2;
    let (lo, upper, _) = values.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = *upper;
    if n % 2 == 1 {
        upper
    } else {
        let lower = lo.iter().copied().max_by(f64::total_cmp).unwrap();
        0.5 * (lower + upper)
    }
}

/// Shifted median of the slope set.
///
/// For odd `N` this is `S_((N+1)/2 + K)`, for even `N` the midpoint of
/// `S_(N/2 + K)` and `S_(N/2 + K + 1)` (1-based). Ranks past `N` are an error.
pub fn estimate_beta(ss: &SlopeSet) -> Result<f64> {
    let n = ss.len();
    let k = ss.offset();
    let out_of_range = |index| Error::OffsetOutOfRange {
        index,
        n_slopes: n,
        offset: k,
    };
    if n % 2 == 1 {
        let idx = (n + 1) / 2 + k;
        ss.order_stat(idx).ok_or_else(|| out_of_range(idx))
    } else {
        let idx = n / 2 + k;
        let lo = ss.order_stat(idx).ok_or_else(|| out_of_range(idx))?;
        let hi = ss.order_stat(idx + 1).ok_or_else(|| out_of_range(idx + 1))?;
        Ok(0.5 * (lo + hi))
    }
}

/// Median of the residuals `y_i - beta * x_i` over all points.
pub fn estimate_alpha(ds: &GroupedDataset, beta_hat: f64) -> f64 {
    let mut residuals: Vec<f64> = ds.points().iter().map(|p| p.y - beta_hat * p.x).collect();
    median(&mut residuals)
}

/// Slope set and point estimate for one dataset.
pub fn fit_with_slopes(
    ds: &GroupedDataset,
    mode: RegressionMode,
    opts: &SlopeOptions,
) -> Result<(SlopeSet, PointEstimate)> {
    let ss = enumerate_slopes_with(ds, mode, opts)?;
    let beta_hat = estimate_beta(&ss)?;
    if !beta_hat.is_finite() {
        return Err(Error::NonFiniteEstimate(beta_hat));
    }
    let alpha_hat = estimate_alpha(ds, beta_hat);
    let est = PointEstimate {
        beta_hat,
        alpha_hat,
        n_slopes: ss.len(),
        offset: ss.offset(),
        mode,
    };
    Ok((ss, est))
}

/// Enumerates slopes, then estimates slope and intercept.
pub fn fit(ds: &GroupedDataset, mode: RegressionMode) -> Result<PointEstimate> {
    fit_with_slopes(ds, mode, &SlopeOptions::default()).map(|(_, e)| e)
}

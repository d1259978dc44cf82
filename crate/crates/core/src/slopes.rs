//! Pairwise slope enumeration and sign counting.
//!
//! Every eligible unordered pair of points contributes one slope. In
//! [`RegressionMode::Block`] only pairs from different groups are eligible;
//! [`RegressionMode::Classic`] and [`RegressionMode::TheilSen`] use all pairs.
//! Identical points and slopes equal to the offset threshold (`-1` by
//! default) are discarded. The offset `K` is the number of retained slopes
//! below the threshold; it is forced to zero for Theil-Sen.
//!
//! Vertical pairs (equal x, different y) are kept as `±∞`. The sign follows
//! the row order: for rows `a < b` the slope is `sign(y_b - y_a) * ∞`.

use serde::{Deserialize, Serialize};

use crate::dataset::GroupedDataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegressionMode {
    /// Cross-group pairs only, with offset.
    Block,
    /// All pairs, with offset.
    Classic,
    /// All pairs, no offset.
    TheilSen,
}

impl RegressionMode {
    pub fn uses_offset(self) -> bool {
        !matches!(self, RegressionMode::TheilSen)
    }

    pub fn name(self) -> &'static str {
        match self {
            RegressionMode::Block => "block",
            RegressionMode::Classic => "classic",
            RegressionMode::TheilSen => "theil-sen",
        }
    }
}

impl std::str::FromStr for RegressionMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "block" | "bpbr" => Ok(RegressionMode::Block),
            "classic" | "cpbr" => Ok(RegressionMode::Classic),
            "theil-sen" | "theilsen" | "tsr" => Ok(RegressionMode::TheilSen),
            other => Err(format!("unknown regression mode `{other}`")),
        }
    }
}

/// Comparison knobs for slope enumeration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeOptions {
    /// Absolute tolerance for the equality tests (identical points, vertical
    /// pairs, slope equal to the threshold). Zero means exact comparison.
    pub tolerance: f64,
    /// Slopes equal to this value are discarded and slopes below it are
    /// counted in the offset. `-1` corresponds to the null hypothesis of a
    /// unit slope.
    pub offset_threshold: f64,
}

impl Default for SlopeOptions {
    fn default() -> Self {
        Self {
            tolerance: 0.0,
            offset_threshold: -1.0,
        }
    }
}

/// Retained slopes in ascending order, with offset and discard accounting.
#[derive(Debug, Clone, PartialEq)]
pub struct SlopeSet {
    slopes: Vec<f64>,
    offset: usize,
    discarded_identical: usize,
    discarded_minus_one: usize,
    mode: RegressionMode,
}

impl SlopeSet {
    /// Builds a slope set from raw slope values, applying the same discard
    /// and offset rules as [`enumerate_slopes`]. NaN values are treated as
    /// identical pairs.
    pub fn from_values(values: Vec<f64>, mode: RegressionMode) -> Result<Self> {
        Self::from_values_with(values, mode, &SlopeOptions::default())
    }

    pub fn from_values_with(
        values: Vec<f64>,
        mode: RegressionMode,
        opts: &SlopeOptions,
    ) -> Result<Self> {
        let mut acc = Accumulator::new(values.len(), opts);
        for v in values {
            if v.is_nan() {
                acc.discarded_identical += 1;
            } else {
                acc.push_slope(v);
            }
        }
        acc.finish(mode)
    }

    /// Ascending slopes (`±∞` allowed).
    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    /// Number of retained slopes `N`.
    pub fn len(&self) -> usize {
        self.slopes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slopes.is_empty()
    }

    /// Offset `K`.
    pub fn offset(&self) -> usize {
        self.offset
    }

    pub fn discarded_identical(&self) -> usize {
        self.discarded_identical
    }

    pub fn discarded_minus_one(&self) -> usize {
        self.discarded_minus_one
    }

    pub fn mode(&self) -> RegressionMode {
        self.mode
    }

    /// 1-based order statistic `S_(rank)`.
    pub fn order_stat(&self, rank: usize) -> Option<f64> {
        rank.checked_sub(1).and_then(|i| self.slopes.get(i).copied())
    }
}

struct Accumulator<'a> {
    slopes: Vec<f64>,
    below: usize,
    discarded_identical: usize,
    discarded_minus_one: usize,
    opts: &'a SlopeOptions,
}

impl<'a> Accumulator<'a> {
    fn new(capacity: usize, opts: &'a SlopeOptions) -> Self {
        Self {
            slopes: Vec::with_capacity(capacity),
            below: 0,
            discarded_identical: 0,
            discarded_minus_one: 0,
            opts,
        }
    }

    #[inline]
    fn push_pair(&mut self, xa: f64, ya: f64, xb: f64, yb: f64) {
        let dx = xb - xa;
        let dy = yb - ya;
        let tol = self.opts.tolerance;
        if dx.abs() <= tol {
            if dy.abs() <= tol {
                self.discarded_identical += 1;
            } else if dy > 0.0 {
                self.push_slope(f64::INFINITY);
            } else {
                self.push_slope(f64::NEG_INFINITY);
            }
            return;
        }
        self.push_slope(dy / dx);
    }

    #[inline]
    fn push_slope(&mut self, s: f64) {
        let threshold = self.opts.offset_threshold;
        let tol = self.opts.tolerance;
        if (s - threshold).abs() <= tol {
            self.discarded_minus_one += 1;
            return;
        }
        if s < threshold {
            self.below += 1;
        }
        // -0.0 and 0.0 must sort as one value
        self.slopes.push(s + 0.0);
    }

    fn finish(mut self, mode: RegressionMode) -> Result<SlopeSet> {
        if self.slopes.is_empty() {
            return Err(Error::NoSlopesRemaining);
        }
        self.slopes.sort_unstable_by(f64::total_cmp);
        Ok(SlopeSet {
            slopes: self.slopes,
            offset: if mode.uses_offset() { self.below } else { 0 },
            discarded_identical: self.discarded_identical,
            discarded_minus_one: self.discarded_minus_one,
            mode,
        })
    }
}

/// Upper bound on the number of eligible pairs for `mode`.
pub fn eligible_pairs(ds: &GroupedDataset, mode: RegressionMode) -> usize {
    let n = ds.n();
    let all = n * n.saturating_sub(1) / 2;
    match mode {
        RegressionMode::Block => {
            all - ds
                .group_sizes()
                .iter()
                .map(|&p| p * p.saturating_sub(1) / 2)
                .sum::<usize>()
        }
        _ => all,
    }
}

/// Enumerates the pairwise slopes of `ds` with default options.
pub fn enumerate_slopes(ds: &GroupedDataset, mode: RegressionMode) -> Result<SlopeSet> {
    enumerate_slopes_with(ds, mode, &SlopeOptions::default())
}

pub fn enumerate_slopes_with(
    ds: &GroupedDataset,
    mode: RegressionMode,
    opts: &SlopeOptions,
) -> Result<SlopeSet> {
    if mode == RegressionMode::Block && ds.m() < 2 {
        return Err(Error::BlockModeNeedsTwoGroups(ds.m()));
    }
    let pts = ds.points();
    let mut acc = Accumulator::new(eligible_pairs(ds, mode), opts);
    let block = mode == RegressionMode::Block;
    for (a, pa) in pts.iter().enumerate() {
        for pb in &pts[a + 1..] {
            if block && pa.group == pb.group {
                continue;
            }
            acc.push_pair(pa.x, pa.y, pb.x, pb.y);
        }
    }
    acc.finish(mode)
}

/// Counts of slopes above (`P`) and below (`Q`) a reference slope.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SignCounts {
    pub above: usize,
    pub below: usize,
    /// `above - below`.
    pub c_tilde: i64,
}

/// Counts slopes strictly above and strictly below `beta0`. Ties count in neither.
pub fn count_signs(ss: &SlopeSet, beta0: f64) -> SignCounts {
    let s = ss.slopes();
    let below = s.partition_point(|&v| v < beta0);
    let not_above = s.partition_point(|&v| v <= beta0);
    let above = s.len() - not_above;
    SignCounts {
        above,
        below,
        c_tilde: above as i64 - below as i64,
    }
}

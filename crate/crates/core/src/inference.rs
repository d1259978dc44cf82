//! Asymptotic confidence intervals and the method-equivalence test.
//!
//! The slope interval is `[S_(M1+K), S_(M2+K)]` with
//! `M1 = ⌊(N - C_γ)/2⌋`, `M2 = N - M1 + 1` and `C_γ = w_{γ/2} σ̃`, where
//! `w_{γ/2}` is the `1 - γ/2` standard normal quantile and `σ̃² = V[C̃]`.
//! `gamma` is the error probability, so `gamma = 0.05` gives a 95% interval.
//!
//! The intercept interval is derived from the slope limits and carries no
//! coverage guarantee of its own. The equivalence verdict combines both
//! containments without multiplicity adjustment.

use serde::{Deserialize, Serialize};

use crate::dataset::GroupedDataset;
use crate::error::{Error, Result};
use crate::estimator::{fit_with_slopes, median, PointEstimate};
use crate::slopes::{RegressionMode, SlopeOptions, SlopeSet};
use crate::variance::{estimate_q_empirical, VarianceModel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConfidenceInterval {
    pub lower: f64,
    pub upper: f64,
    /// Confidence level `1 - gamma`.
    pub level: f64,
}

impl ConfidenceInterval {
    pub fn contains(&self, v: f64) -> bool {
        self.lower <= v && v <= self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Slope interval together with the rank arithmetic that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BetaInterval {
    pub ci: ConfidenceInterval,
    pub m1: i64,
    pub m2: i64,
    pub c_gamma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    /// `0 ∈ alpha CI` and `1 ∈ beta CI`.
    Equivalent,
    /// `0 ∉ alpha CI` only.
    ConstantBias,
    /// `1 ∉ beta CI` only.
    ProportionalBias,
    /// Both containments fail.
    Both,
}

impl Verdict {
    pub fn from_containment(zero_in_alpha: bool, one_in_beta: bool) -> Self {
        match (zero_in_alpha, one_in_beta) {
            (true, true) => Verdict::Equivalent,
            (false, true) => Verdict::ConstantBias,
            (true, false) => Verdict::ProportionalBias,
            (false, false) => Verdict::Both,
        }
    }
}

/// Which variance of `C̃` drives the slope interval in block mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VarianceSource {
    /// Non-overlapping (tied-ranks) variance; conservative under overlap.
    #[default]
    Conservative,
    /// Exact variance with overlap fractions estimated from the sample.
    EmpiricalQ,
}

impl std::str::FromStr for VarianceSource {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "conservative" => Ok(VarianceSource::Conservative),
            "empirical-q" => Ok(VarianceSource::EmpiricalQ),
            other => Err(format!("unknown variance source `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub gamma: f64,
    pub variance: VarianceSource,
    pub slopes: SlopeOptions,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            gamma: 0.05,
            variance: VarianceSource::Conservative,
            slopes: SlopeOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub estimate: PointEstimate,
    pub beta_ci: ConfidenceInterval,
    pub alpha_ci: ConfidenceInterval,
    pub variance: VarianceModel,
    pub verdict: Verdict,
    pub m1: i64,
    pub m2: i64,
    pub c_gamma: f64,
    pub gamma: f64,
}

// Wichura, AS241 (PPND16).
#[allow(clippy::excessive_precision)]
const A: [f64; 8] = [
    3.387_132_872_796_366_608,
    1.331_416_678_917_843_774_5e2,
    1.971_590_950_306_551_442_7e3,
    1.373_169_376_550_946_112_5e4,
    4.592_195_393_154_987_145_7e4,
    6.726_577_092_700_870_085_3e4,
    3.343_057_558_358_812_810_5e4,
    2.509_080_928_730_122_672_7e3,
];
#[allow(clippy::excessive_precision)]
const B: [f64; 8] = [
    1.0,
    4.231_333_070_160_091_125_2e1,
    6.871_870_074_920_579_083e2,
    5.394_196_021_424_751_107_7e3,
    2.121_379_430_158_659_586_7e4,
    3.930_789_580_009_271_061e4,
    2.872_908_573_572_194_267_4e4,
    5.226_495_278_852_854_561e3,
];
#[allow(clippy::excessive_precision)]
const C: [f64; 8] = [
    1.423_437_110_749_683_577_34,
    4.630_337_846_156_545_295_9,
    5.769_497_221_460_691_405_5,
    3.647_848_324_763_204_605_04,
    1.270_458_252_452_368_382_58,
    2.417_807_251_774_506_117_7e-1,
    2.272_384_498_926_918_458_33e-2,
    7.745_450_142_783_414_076_4e-4,
];
#[allow(clippy::excessive_precision)]
const D: [f64; 8] = [
    1.0,
    2.053_191_626_637_758_821_87,
    1.676_384_830_183_803_849_4,
    6.897_673_349_851_000_045_5e-1,
    1.481_039_764_274_800_745_9e-1,
    1.519_866_656_361_645_719_66e-2,
    5.475_938_084_995_344_946e-4,
    1.050_750_071_644_416_843_24e-9,
];
#[allow(clippy::excessive_precision)]
const E: [f64; 8] = [
    6.657_904_643_501_103_777_2,
    5.463_784_911_164_114_369_9,
    1.784_826_539_917_291_335_8,
    2.965_605_718_285_048_912_3e-1,
    2.653_218_952_657_612_309_3e-2,
    1.242_660_947_388_078_438_6e-3,
    2.711_555_568_743_487_578_15e-5,
    2.010_334_399_292_288_132_65e-7,
];
#[allow(clippy::excessive_precision)]
const F: [f64; 8] = [
    1.0,
    5.998_322_065_558_879_376_9e-1,
    1.369_298_809_227_358_053_1e-1,
    1.487_536_129_085_061_485_25e-2,
    7.868_691_311_456_132_591e-4,
    1.846_318_317_510_054_681_8e-5,
    1.421_511_758_316_445_888_7e-7,
    2.044_263_103_389_939_785_64e-15,
];

fn ratio(num: &[f64; 8], den: &[f64; 8], r: f64) -> f64 {
    let horner = |c: &[f64; 8]| c.iter().rev().fold(0.0, |acc, &v| acc * r + v);
    horner(num) / horner(den)
}

/// Inverse standard normal CDF.
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::OutOfDomain(p));
    }
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        return Ok(q * ratio(&A, &B, r));
    }
    let tail = if q < 0.0 { p } else { 1.0 - p };
    let r = (-tail.ln()).sqrt();
    let z = if r <= 5.0 {
        ratio(&C, &D, r - 1.6)
    } else {
        ratio(&E, &F, r - 5.0)
    };
    Ok(if q < 0.0 { -z } else { z })
}

/// Slope interval from the sorted slopes and a variance model.
pub fn beta_ci(ss: &SlopeSet, v: &VarianceModel, gamma: f64) -> Result<BetaInterval> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::OutOfDomain(gamma));
    }
    if v.value < 0.0 || v.value.is_nan() {
        return Err(Error::NegativeVariance(v.value));
    }
    let n = ss.len() as i64;
    let k = ss.offset() as i64;
    let w = normal_quantile(1.0 - gamma / 2.0)?;
    let c_gamma = w * v.sigma();
    let m1 = ((n as f64 - c_gamma) / 2.0).floor() as i64;
    let m2 = n - m1 + 1;
    let (lo, hi) = (m1 + k, m2 + k);
    if lo < 1 || hi > n || lo > hi {
        return Err(Error::IndexOutOfRange {
            lower: lo,
            upper: hi,
            n_slopes: ss.len(),
        });
    }
    let s = ss.slopes();
    Ok(BetaInterval {
        ci: ConfidenceInterval {
            lower: s[(lo - 1) as usize],
            upper: s[(hi - 1) as usize],
            level: 1.0 - gamma,
        },
        m1,
        m2,
        c_gamma,
    })
}

/// Intercept limits `a_L = median{y - b_U x}`, `a_U = median{y - b_L x}`.
///
/// Endpoints are swapped when they come out reversed, which can only happen
/// when every x is negative. An unbounded slope interval gives an unbounded
/// intercept interval.
pub fn alpha_ci(ds: &GroupedDataset, beta_ci: &ConfidenceInterval) -> ConfidenceInterval {
    if !beta_ci.lower.is_finite() || !beta_ci.upper.is_finite() {
        return ConfidenceInterval {
            lower: f64::NEG_INFINITY,
            upper: f64::INFINITY,
            level: beta_ci.level,
        };
    }
    let residual_median = |b: f64| {
        let mut r: Vec<f64> = ds.points().iter().map(|p| p.y - b * p.x).collect();
        median(&mut r)
    };
    let a_l = residual_median(beta_ci.upper);
    let a_u = residual_median(beta_ci.lower);
    ConfidenceInterval {
        lower: a_l.min(a_u),
        upper: a_l.max(a_u),
        level: beta_ci.level,
    }
}

/// Variance model used for inference in `mode`.
pub fn variance_for(
    ds: &GroupedDataset,
    mode: RegressionMode,
    source: VarianceSource,
) -> Result<VarianceModel> {
    match (mode, source) {
        (RegressionMode::Block, VarianceSource::Conservative) => {
            Ok(VarianceModel::nonoverlapping(ds.group_sizes()))
        }
        (RegressionMode::Block, VarianceSource::EmpiricalQ) => {
            VarianceModel::exact_with_q(ds.group_sizes(), estimate_q_empirical(ds))
        }
        _ => Ok(VarianceModel::classic(ds.n())),
    }
}

/// Full fit: point estimates, both intervals and the equivalence verdict.
pub fn equivalence_test(
    ds: &GroupedDataset,
    mode: RegressionMode,
    gamma: f64,
    source: VarianceSource,
) -> Result<FitResult> {
    equivalence_test_with(
        ds,
        mode,
        &FitOptions {
            gamma,
            variance: source,
            ..FitOptions::default()
        },
    )
}

pub fn equivalence_test_with(
    ds: &GroupedDataset,
    mode: RegressionMode,
    opts: &FitOptions,
) -> Result<FitResult> {
    let (ss, estimate) = fit_with_slopes(ds, mode, &opts.slopes)?;
    let variance = variance_for(ds, mode, opts.variance)?;
    let bi = beta_ci(&ss, &variance, opts.gamma)?;
    debug_assert!(bi.ci.contains(estimate.beta_hat));
    let aci = alpha_ci(ds, &bi.ci);
    let verdict = Verdict::from_containment(aci.contains(0.0), bi.ci.contains(1.0));
    Ok(FitResult {
        estimate,
        beta_ci: bi.ci,
        alpha_ci: aci,
        variance,
        verdict,
        m1: bi.m1,
        m2: bi.m2,
        c_gamma: bi.c_gamma,
        gamma: opts.gamma,
    })
}

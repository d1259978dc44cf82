//! Seeded Monte Carlo harness for coverage and power of the slope interval.
//!
//! Group `k` has true value `x̃_k` (default `k`, 1-based) and
//! `ỹ_k = α + β x̃_k`. Each replicate draws `x = x̃_k + ε`, `y = ỹ_k + η`
//! with iid errors of standard deviation `sigma`.
//!
//! Replicate `r` of a scenario with seed `s` uses ChaCha8 seeded from `s`
//! on stream `r`, so any replicate can be regenerated in isolation and the
//! results do not depend on how replicates are scheduled across threads.
//! Per-replicate metrics are reduced in replicate order.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::GroupedDataset;
use crate::error::{Error, Result};
use crate::inference::{equivalence_test_with, FitOptions, VarianceSource};
use crate::slopes::RegressionMode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorDist {
    #[default]
    Normal,
    /// Uniform on `(-σ√3, σ√3)`, which has standard deviation σ.
    Uniform,
}

impl ErrorDist {
    /// One draw with standard deviation `sigma`.
    pub fn sample<R: Rng + ?Sized>(self, rng: &mut R, sigma: f64) -> f64 {
        match self {
            ErrorDist::Normal => sigma * rng.sample::<f64, _>(StandardNormal),
            ErrorDist::Uniform => {
                let half_width = sigma * 3f64.sqrt();
                (2.0 * rng.random::<f64>() - 1.0) * half_width
            }
        }
    }
}

fn default_gamma() -> f64 {
    0.05
}

fn default_modes() -> Vec<RegressionMode> {
    vec![RegressionMode::Classic, RegressionMode::Block]
}

/// Generative configuration for one simulated design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub group_sizes: Vec<usize>,
    pub beta: f64,
    #[serde(default)]
    pub alpha: f64,
    /// Error standard deviation, shared by both axes.
    pub sigma: f64,
    #[serde(default, rename = "dist")]
    pub error_dist: ErrorDist,
    pub replicates: usize,
    pub seed: u64,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_modes")]
    pub modes: Vec<RegressionMode>,
    /// Overrides the default true values `x̃_k = k`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub true_x: Option<Vec<f64>>,
    #[serde(default)]
    pub variance: VarianceSource,
}

impl Scenario {
    pub fn new(group_sizes: Vec<usize>, beta: f64, sigma: f64, replicates: usize, seed: u64) -> Self {
        Self {
            name: None,
            group_sizes,
            beta,
            alpha: 0.0,
            sigma,
            error_dist: ErrorDist::Normal,
            replicates,
            seed,
            gamma: default_gamma(),
            modes: default_modes(),
            true_x: None,
            variance: VarianceSource::Conservative,
        }
    }

    /// Parses a TOML scenario file.
    pub fn from_toml(text: &str) -> Result<Self> {
        let sc: Scenario = toml::from_str(text).map_err(|e| Error::InvalidScenario(e.to_string()))?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes to TOML")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidScenario(msg.to_string()));
        if self.group_sizes.is_empty() || self.group_sizes.contains(&0) {
            return bad("group_sizes must be non-empty with every size >= 1");
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return bad("sigma must be positive and finite");
        }
        if self.replicates == 0 {
            return bad("replicates must be >= 1");
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad("gamma must lie in (0, 1)");
        }
        if !self.beta.is_finite() || !self.alpha.is_finite() {
            return bad("alpha and beta must be finite");
        }
        if self.modes.is_empty() {
            return bad("at least one mode is required");
        }
        if let Some(tx) = &self.true_x {
            if tx.len() != self.group_sizes.len() {
                return bad("true_x needs one value per group");
            }
            if tx.iter().any(|v| !v.is_finite()) {
                return bad("true_x must be finite");
            }
        }
        Ok(())
    }

    /// True x-value of group `k` (0-based).
    pub fn true_x(&self, k: usize) -> f64 {
        match &self.true_x {
            Some(tx) => tx[k],
            None => (k + 1) as f64,
        }
    }

    pub fn true_y(&self, k: usize) -> f64 {
        self.alpha + self.beta * self.true_x(k)
    }

    pub fn n(&self) -> usize {
        self.group_sizes.iter().sum()
    }
}

/// Random stream for replicate `index` of a scenario seeded with `seed`.
pub fn replicate_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Draws one replicate dataset. Group labels are `0..m`.
pub fn generate_dataset(sc: &Scenario, replicate_index: u64) -> GroupedDataset {
    let mut rng = replicate_rng(sc.seed, replicate_index);
    let mut rows = Vec::with_capacity(sc.n());
    for (k, &p) in sc.group_sizes.iter().enumerate() {
        let (tx, ty) = (sc.true_x(k), sc.true_y(k));
        for _ in 0..p {
            let x = tx + sc.error_dist.sample(&mut rng, sc.sigma);
            let y = ty + sc.error_dist.sample(&mut rng, sc.sigma);
            rows.push((x, y, k));
        }
    }
    GroupedDataset::from_rows(rows).expect("generated data is finite and non-empty")
}

/// Metrics of one successful replicate fit.
#[derive(Debug, Clone, Copy, PartialEq)]
struct ReplicateFit {
    beta_hat: f64,
    lower: f64,
    upper: f64,
    alpha_in: bool,
    equivalent: bool,
}

/// Aggregated Monte Carlo metrics for one regression mode.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeSummary {
    pub mode: RegressionMode,
    /// Replicates that produced an interval.
    pub replicates_used: usize,
    pub failures: usize,
    pub mean_beta_hat: f64,
    pub mean_ci_lower: f64,
    pub mean_ci_upper: f64,
    /// Fraction of intervals containing the true slope.
    pub coverage: f64,
    /// Fraction of intervals excluding 1.
    pub power: f64,
    pub mc_se_coverage: f64,
    pub mc_se_power: f64,
    /// Fraction of intercept intervals containing the true intercept.
    pub alpha_coverage: f64,
    /// Fraction of replicates with an `Equivalent` verdict.
    pub equivalent_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimSummary {
    pub scenario: Scenario,
    pub modes: Vec<ModeSummary>,
}

impl SimSummary {
    pub fn mode(&self, mode: RegressionMode) -> Option<&ModeSummary> {
        self.modes.iter().find(|m| m.mode == mode)
    }
}

fn binomial_se(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

fn summarize(mode: RegressionMode, beta: f64, fits: &[Option<ReplicateFit>]) -> Result<ModeSummary> {
    let ok: Vec<&ReplicateFit> = fits.iter().flatten().collect();
    let used = ok.len();
    if used == 0 {
        return Err(Error::AllReplicatesFailed(fits.len()));
    }
    let nf = used as f64;
    let mut sum_beta = 0.0;
    let mut sum_lo = 0.0;
    let mut sum_hi = 0.0;
    let (mut covered, mut rejected, mut alpha_in, mut equiv) = (0usize, 0usize, 0usize, 0usize);
    for f in &ok {
        sum_beta += f.beta_hat;
        sum_lo += f.lower;
        sum_hi += f.upper;
        covered += usize::from(f.lower <= beta && beta <= f.upper);
        rejected += usize::from(!(f.lower <= 1.0 && 1.0 <= f.upper));
        alpha_in += usize::from(f.alpha_in);
        equiv += usize::from(f.equivalent);
    }
    let coverage = covered as f64 / nf;
    let power = rejected as f64 / nf;
    Ok(ModeSummary {
        mode,
        replicates_used: used,
        failures: fits.len() - used,
        mean_beta_hat: sum_beta / nf,
        mean_ci_lower: sum_lo / nf,
        mean_ci_upper: sum_hi / nf,
        coverage,
        power,
        mc_se_coverage: binomial_se(coverage, used),
        mc_se_power: binomial_se(power, used),
        alpha_coverage: alpha_in as f64 / nf,
        equivalent_rate: equiv as f64 / nf,
    })
}

/// Runs every replicate of `sc` in every requested mode.
pub fn run_scenario(sc: &Scenario) -> Result<SimSummary> {
    sc.validate()?;
    let opts = FitOptions {
        gamma: sc.gamma,
        variance: sc.variance,
        ..FitOptions::default()
    };
    let per_replicate: Vec<Vec<Option<ReplicateFit>>> = (0..sc.replicates as u64)
        .into_par_iter()
        .map(|r| {
            let ds = generate_dataset(sc, r);
            sc.modes
                .iter()
                .map(|&mode| {
                    equivalence_test_with(&ds, mode, &opts).ok().map(|fr| ReplicateFit {
                        beta_hat: fr.estimate.beta_hat,
                        lower: fr.beta_ci.lower,
                        upper: fr.beta_ci.upper,
                        alpha_in: fr.alpha_ci.contains(sc.alpha),
                        equivalent: fr.verdict == crate::inference::Verdict::Equivalent,
                    })
                })
                .collect()
        })
        .collect();

    let modes = sc
        .modes
        .iter()
        .enumerate()
        .map(|(j, &mode)| {
            let fits: Vec<Option<ReplicateFit>> = per_replicate.iter().map(|r| r[j]).collect();
            summarize(mode, sc.beta, &fits)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SimSummary {
        scenario: sc.clone(),
        modes,
    })
}

/// Group-size layouts of the reference grid.
pub const TABLE1_CONFIGS: [&str; 4] = ["100-100", "180-20", "10x100", "820-9x20"];
pub const TABLE1_BETAS: [f64; 4] = [1.0, 0.98, 0.8, 0.2];
/// `(label, sigma)`: 0.2 gives low overlap, 0.4 high overlap.
pub const TABLE1_OVERLAPS: [(&str, f64); 2] = [("low", 0.2), ("high", 0.4)];

/// Group sizes for one of [`TABLE1_CONFIGS`].
pub fn table1_group_sizes(config: &str) -> Option<Vec<usize>> {
    match config {
        "100-100" => Some(vec![100, 100]),
        "180-20" => Some(vec![180, 20]),
        "10x100" => Some(vec![100; 10]),
        "820-9x20" => {
            let mut v = vec![820];
            v.extend([20; 9]);
            Some(v)
        }
        _ => None,
    }
}

fn mix_seed(seed: u64, index: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// One cell of the reference grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table1Row {
    pub beta: f64,
    pub groups: String,
    pub overlap: String,
    pub summary: SimSummary,
}

/// The scenario of the reference grid for `(beta, config, overlap)`.
///
/// Each cell gets its own seed derived from `seed` and the cell position, so
/// a single cell can be rerun without the rest of the grid.
pub fn table1_scenario(beta: f64, config: &str, overlap: &str, replicates: usize, seed: u64) -> Option<Scenario> {
    let bi = TABLE1_BETAS.iter().position(|&b| b == beta)?;
    let ci = TABLE1_CONFIGS.iter().position(|&c| c == config)?;
    let oi = TABLE1_OVERLAPS.iter().position(|&(o, _)| o == overlap)?;
    let index = (bi * TABLE1_CONFIGS.len() + ci) * TABLE1_OVERLAPS.len() + oi;
    let mut sc = Scenario::new(
        table1_group_sizes(config)?,
        beta,
        TABLE1_OVERLAPS[oi].1,
        replicates,
        mix_seed(seed, index as u64),
    );
    sc.name = Some(format!("beta={beta} {config} {overlap}"));
    Some(sc)
}

/// Runs the full reference grid: 4 slopes × 4 layouts × 2 overlap levels,
/// each in classic and block mode.
pub fn table1_suite(replicates: usize, seed: u64) -> Result<Vec<Table1Row>> {
    if replicates < 100 {
        return Err(Error::InvalidScenario("table1 needs at least 100 replicates".into()));
    }
    let mut rows = Vec::new();
    for &beta in &TABLE1_BETAS {
        for config in TABLE1_CONFIGS {
            for (overlap, _) in TABLE1_OVERLAPS {
                let sc = table1_scenario(beta, config, overlap, replicates, seed)
                    .expect("grid cell exists");
                rows.push(Table1Row {
                    beta,
                    groups: config.to_string(),
                    overlap: overlap.to_string(),
                    summary: run_scenario(&sc)?,
                });
            }
        }
    }
    Ok(rows)
}

fn fmt_prob(v: f64) -> String {
    let s = format!("{v:.3}");
    s.strip_prefix("0.").map_or(s.clone(), |t| format!(".{t}"))
}

fn fmt_interval(lo: f64, hi: f64) -> String {
    format!("[{},{}]", fmt_prob(lo), fmt_prob(hi))
}

/// Aligned text table: mean slope, mean interval, coverage and power for
/// classic (cPBR) and block (BPBR) mode side by side.
pub fn format_table1(rows: &[Table1Row]) -> String {
    let mut out = String::new();
    let header = [
        "slope", "groups", "overlap", "b cPBR", "b BPBR", "I cPBR", "I BPBR", "cov cPBR",
        "cov BPBR", "pow cPBR", "pow BPBR",
    ];
    let mut lines: Vec<Vec<String>> = vec![header.iter().map(|s| s.to_string()).collect()];
    for r in rows {
        let c = r.summary.mode(RegressionMode::Classic);
        let b = r.summary.mode(RegressionMode::Block);
        let cell = |m: Option<&ModeSummary>, f: &dyn Fn(&ModeSummary) -> String| {
            m.map_or_else(|| "-".to_string(), f)
        };
        lines.push(vec![
            format!("{}", r.beta),
            r.groups.clone(),
            r.overlap.clone(),
            cell(c, &|m| fmt_prob(m.mean_beta_hat)),
            cell(b, &|m| fmt_prob(m.mean_beta_hat)),
            cell(c, &|m| fmt_interval(m.mean_ci_lower, m.mean_ci_upper)),
            cell(b, &|m| fmt_interval(m.mean_ci_lower, m.mean_ci_upper)),
            cell(c, &|m| fmt_prob(m.coverage)),
            cell(b, &|m| fmt_prob(m.coverage)),
            cell(c, &|m| fmt_prob(m.power)),
            cell(b, &|m| fmt_prob(m.power)),
        ]);
    }
    let widths: Vec<usize> = (0..header.len())
        .map(|j| lines.iter().map(|l| l[j].len()).max().unwrap_or(0))
        .collect();
    for l in &lines {
        let cells: Vec<String> = l
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(j, (s, &w))| if j < 3 { format!("{s:<w$}") } else { format!("{s:>w$}") })
            .collect();
        writeln!(out, "{}", cells.join("  ").trim_end()).unwrap();
    }
    out
}

/// Aligned text rendering of one scenario summary.
pub fn format_summary(s: &SimSummary) -> String {
    let mut out = String::new();
    let sc = &s.scenario;
    writeln!(
        out,
        "groups={:?} beta={} alpha={} sigma={} dist={:?} replicates={} seed={} gamma={}",
        sc.group_sizes, sc.beta, sc.alpha, sc.sigma, sc.error_dist, sc.replicates, sc.seed, sc.gamma
    )
    .unwrap();
    writeln!(
        out,
        "{:<10} {:>8} {:>17} {:>8} {:>8} {:>8} {:>8}",
        "mode", "mean b", "mean I", "cov", "se", "power", "failed"
    )
    .unwrap();
    for m in &s.modes {
        writeln!(
            out,
            "{:<10} {:>8.4} {:>17} {:>8.4} {:>8.4} {:>8.4} {:>8}",
            m.mode.name(),
            m.mean_beta_hat,
            format!("[{:.3},{:.3}]", m.mean_ci_lower, m.mean_ci_upper),
            m.coverage,
            m.mc_se_coverage,
            m.power,
            m.failures
        )
        .unwrap();
    }
    out
}

/// Delimited plot data for one replicate: every point, the true line and the
/// fitted block and classic lines.
///
/// Columns: `kind,group,x,y,intercept,slope`. Point rows leave the line
/// columns empty and line rows leave the point columns empty.
pub fn plot_data(sc: &Scenario, replicate_index: u64) -> Result<String> {
    let ds = generate_dataset(sc, replicate_index);
    let mut out = String::from("kind,group,x,y,intercept,slope\n");
    for p in ds.points() {
        writeln!(out, "point,{},{},{},,", ds.label(p.group), p.x, p.y).unwrap();
    }
    writeln!(out, "line-true,,,,{},{}", sc.alpha, sc.beta).unwrap();
    for (kind, mode) in [("line-block", RegressionMode::Block), ("line-classic", RegressionMode::Classic)] {
        let est = crate::estimator::fit(&ds, mode)?;
        writeln!(out, "{kind},,,,{},{}", est.alpha_hat, est.beta_hat).unwrap();
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::check_overlap;

    #[test]
    fn tiny_sigma_collapses_to_true_values() {
        let mut sc = Scenario::new(vec![3, 2, 4], 0.8, 1e-12, 1, 7);
        sc.alpha = 0.5;
        let ds = generate_dataset(&sc, 0);
        for p in ds.points() {
            let k = p.group as f64 + 1.0;
            assert!((p.x - k).abs() < 1e-10);
            assert!((p.y - (0.5 + 0.8 * k)).abs() < 1e-10);
        }
    }

    #[test]
    fn replicates_are_reproducible_in_isolation() {
        let sc = Scenario::new(vec![5, 5], 1.0, 0.3, 10, 42);
        let a = generate_dataset(&sc, 3);
        let b = generate_dataset(&sc, 3);
        assert_eq!(a, b);
        assert_ne!(generate_dataset(&sc, 4), a);
    }

    #[test]
    fn uniform_small_sigma_is_separated() {
        let mut sc = Scenario::new(vec![50, 50, 50], 1.0, 0.2, 1, 1);
        sc.error_dist = ErrorDist::Uniform;
        for r in 0..50 {
            assert!(check_overlap(&generate_dataset(&sc, r)).nonoverlapping_x);
        }
    }

    #[test]
    fn uniform_draws_have_requested_sd() {
        let mut rng = replicate_rng(9, 0);
        let v: Vec<f64> = (0..200_000).map(|_| ErrorDist::Uniform.sample(&mut rng, 0.5)).collect();
        let var = v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64;
        assert!((var.sqrt() - 0.5).abs() < 0.005);
        assert!(v.iter().all(|x| x.abs() < 0.5 * 3f64.sqrt()));
    }

    #[test]
    fn scenario_validation() {
        let ok = Scenario::new(vec![2, 2], 1.0, 0.2, 10, 1);
        assert!(ok.validate().is_ok());
        let mut bad = ok.clone();
        bad.sigma = 0.0;
        assert!(bad.validate().is_err());
        let mut bad = ok.clone();
        bad.replicates = 0;
        assert!(bad.validate().is_err());
        let mut bad = ok.clone();
        bad.true_x = Some(vec![1.0]);
        assert!(bad.validate().is_err());
        let mut bad = ok;
        bad.group_sizes = vec![3, 0];
        assert!(bad.validate().is_err());
    }

    #[test]
    fn scenario_toml_round_trip() {
        let text = r#"
            group_sizes = [4, 4, 4]
            beta = 0.98
            sigma = 0.2
            dist = "uniform"
            replicates = 50
            seed = 11
            modes = ["block"]
            true_x = [10.0, 20.0, 30.0]
            variance = "empirical-q"
        "#;
        let sc = Scenario::from_toml(text).unwrap();
        assert_eq!(sc.error_dist, ErrorDist::Uniform);
        assert_eq!(sc.modes, vec![RegressionMode::Block]);
        assert_eq!(sc.gamma, 0.05);
        assert_eq!(sc.variance, VarianceSource::EmpiricalQ);
        assert_eq!(Scenario::from_toml(&sc.to_toml()).unwrap(), sc);
        assert!(Scenario::from_toml("beta = 1.0").is_err());
        assert!(Scenario::from_toml(&text.replace("seed = 11", "seed = 11\nbogus = 1")).is_err());
    }

    #[test]
    fn failures_are_counted_and_all_failed_is_an_error() {
        // two points per replicate: the interval ranks fall outside 1..=N
        let sc = Scenario::new(vec![1, 1], 1.0, 0.5, 20, 3);
        assert!(matches!(run_scenario(&sc), Err(Error::AllReplicatesFailed(20))));
    }

    #[test]
    fn summary_fields_are_consistent() {
        let sc = Scenario::new(vec![8, 8, 8], 1.0, 0.2, 200, 5);
        let s = run_scenario(&sc).unwrap();
        for m in &s.modes {
            assert_eq!(m.replicates_used + m.failures, 200);
            assert!((0.0..=1.0).contains(&m.coverage) && (0.0..=1.0).contains(&m.power));
            assert!((m.mc_se_coverage - binomial_se(m.coverage, m.replicates_used)).abs() < 1e-15);
            assert!(m.mean_ci_lower <= m.mean_beta_hat && m.mean_beta_hat <= m.mean_ci_upper);
            // the true slope is 1, so coverage and power are complementary
            assert!((m.coverage + m.power - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn table1_layouts() {
        assert_eq!(table1_group_sizes("820-9x20").unwrap().iter().sum::<usize>(), 1000);
        assert_eq!(table1_group_sizes("10x100").unwrap().len(), 10);
        assert!(table1_group_sizes("1-1").is_none());
        let a = table1_scenario(0.8, "180-20", "high", 100, 1).unwrap();
        assert_eq!(a.sigma, 0.4);
        let b = table1_scenario(0.8, "180-20", "low", 100, 1).unwrap();
        assert_ne!(a.seed, b.seed);
        assert!(table1_suite(99, 1).is_err());
    }

    #[test]
    fn plot_data_layout() {
        let sc = Scenario::new(vec![18, 2], 0.8, 0.2, 1, 4);
        let text = plot_data(&sc, 0).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 1 + 20 + 3);
        assert!(lines[21].starts_with("line-true,,,,0,0.8"));
        assert!(lines[22].starts_with("line-block,"));
        assert!(lines[23].starts_with("line-classic,"));
    }

    #[test]
    fn probability_formatting() {
        assert_eq!(fmt_prob(0.95), ".950");
        assert_eq!(fmt_prob(1.0), "1.000");
        assert_eq!(fmt_interval(0.923, 1.085), "[.923,1.085]");
    }
}

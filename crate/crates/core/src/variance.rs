//! Variance of the signed slope count `C̃ = P(β) - Q(β)`.
//!
//! The exact variance depends on the group sizes and on the overlap
//! fractions `q[k][u]`: the probability that one point of group `u` lies
//! strictly between two points of group `k` on the x-axis. With `q ≡ 0`
//! (separated groups) the exact formula reduces to the tied-ranks variance,
//! and with all groups of size one it reduces to `n(n-1)(2n+5)/18`.
//!
//! Integer parts are accumulated exactly; the `1/18` factor is applied last.

use serde::Serialize;

use crate::dataset::GroupedDataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum QSource {
    AssumedZero,
    Empirical,
    MonteCarlo,
}

/// Overlap fractions `q[k][u]` (two points from `k`, one from `u`).
/// Not symmetric in general; the diagonal is unused and kept at zero.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QMatrix {
    m: usize,
    q: Vec<f64>,
    pub source: QSource,
}

impl QMatrix {
    pub fn zeros(m: usize) -> Self {
        Self {
            m,
            q: vec![0.0; m * m],
            source: QSource::AssumedZero,
        }
    }

    /// Builds a matrix from rows. Diagonal entries are ignored.
    pub fn from_rows(rows: &[Vec<f64>], source: QSource) -> Self {
        let m = rows.len();
        let mut out = Self::zeros(m);
        out.source = source;
        for (k, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), m, "q matrix must be square");
            for (u, &v) in row.iter().enumerate() {
                if k != u {
                    out.set(k, u, v);
                }
            }
        }
        out
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn get(&self, k: usize, u: usize) -> f64 {
        self.q[k * self.m + u]
    }

    pub fn set(&mut self, k: usize, u: usize, v: f64) {
        assert!(k != u, "diagonal of the q matrix is unused");
        self.q[k * self.m + u] = v;
    }

    /// `Σ_k Σ_{u≠k} q[k][u]`.
    pub fn off_diagonal_sum(&self) -> f64 {
        self.q.iter().sum()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.q.chunks(self.m.max(1)).map(<[f64]>::to_vec).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.q.iter().all(|&v| v == 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum VarianceKind {
    ClassicUngrouped,
    NonOverlapping,
    ExactWithQ,
    EqualGroupsNonOverlapping,
}

/// A computed `V[C̃]` together with the formula and inputs it came from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VarianceModel {
    pub kind: VarianceKind,
    pub value: f64,
    pub group_sizes: Vec<usize>,
    pub q: Option<QMatrix>,
}

impl VarianceModel {
    /// Ungrouped variance for `n` independent points.
    pub fn classic(n: usize) -> Self {
        Self {
            kind: VarianceKind::ClassicUngrouped,
            value: variance_classic(n),
            group_sizes: vec![1; n],
            q: None,
        }
    }

    /// Tied-ranks variance. Picks the most specific formula that applies:
    /// all singletons, equal groups, or the general non-overlapping form.
    pub fn nonoverlapping(group_sizes: &[usize]) -> Self {
        let n: usize = group_sizes.iter().sum();
        if group_sizes.iter().all(|&p| p == 1) {
            return Self::classic(n);
        }
        let equal = group_sizes.windows(2).all(|w| w[0] == w[1]);
        let (kind, value) = if equal {
            let value = variance_equal_groups(group_sizes.len(), group_sizes[0], 0.0)
                .expect("q_sum = 0 cannot produce a negative variance");
            (VarianceKind::EqualGroupsNonOverlapping, value)
        } else {
            (VarianceKind::NonOverlapping, variance_nonoverlapping(group_sizes))
        };
        Self {
            kind,
            value,
            group_sizes: group_sizes.to_vec(),
            q: None,
        }
    }

    pub fn exact_with_q(group_sizes: &[usize], q: QMatrix) -> Result<Self> {
        let value = variance_exact(group_sizes, &q)?;
        Ok(Self {
            kind: VarianceKind::ExactWithQ,
            value,
            group_sizes: group_sizes.to_vec(),
            q: Some(q),
        })
    }

    /// `σ̃ = V[C̃]^(1/2)`.
    pub fn sigma(&self) -> f64 {
        self.value.sqrt()
    }
}

fn tie_term(p: usize) -> f64 {
    let p = p as f64;
    p * (p - 1.0) * (2.0 * p + 5.0)
}

/// `n(n-1)(2n+5)/18`.
pub fn variance_classic(n: usize) -> f64 {
    tie_term(n) / 18.0
}

/// `(n(n-1)(2n+5) - Σ p_k(p_k-1)(2p_k+5)) / 18`.
pub fn variance_nonoverlapping(group_sizes: &[usize]) -> f64 {
    let n: usize = group_sizes.iter().sum();
    let ties: f64 = group_sizes.iter().map(|&p| tie_term(p)).sum();
    (tie_term(n) - ties) / 18.0
}

/// Exact variance for arbitrary group sizes and overlap fractions:
///
/// `(n(n-1)(2n+5) - Σ_k p_k(p_k-1)((2p_k+5) + 4 Σ_{u≠k} p_u q[k][u])) / 18`.
pub fn variance_exact(group_sizes: &[usize], q: &QMatrix) -> Result<f64> {
    assert_eq!(q.m(), group_sizes.len(), "q matrix does not match group count");
    let n: usize = group_sizes.iter().sum();
    let ties: f64 = group_sizes.iter().map(|&p| tie_term(p)).sum();
    let mut overlap = 0.0;
    for (k, &pk) in group_sizes.iter().enumerate() {
        if pk < 2 {
            continue;
        }
        let weighted: f64 = group_sizes
            .iter()
            .enumerate()
            .filter(|&(u, _)| u != k)
            .map(|(u, &pu)| pu as f64 * q.get(k, u))
            .sum();
        overlap += (pk * (pk - 1)) as f64 * weighted;
    }
    let value = (tie_term(n) - ties - 4.0 * overlap) / 18.0;
    if value < 0.0 || value.is_nan() {
        return Err(Error::NegativeVariance(value));
    }
    Ok(value)
}

/// Exact variance for `m` groups of equal size `p` with `q_sum = Σ_k Σ_{u≠k} q[k][u]`:
///
/// `n/18 (3(n-p) + 2(n²-p²)) - 2/9 p²(p-1) q_sum`, `n = mp`.
pub fn variance_equal_groups(m: usize, p: usize, q_sum: f64) -> Result<f64> {
    let n = (m * p) as f64;
    let pf = p as f64;
    let base = n * (3.0 * (n - pf) + 2.0 * (n * n - pf * pf));
    let overlap = 4.0 * pf * pf * (pf - 1.0) * q_sum;
    let value = (base - overlap) / 18.0;
    if value < 0.0 || value.is_nan() {
        return Err(Error::NegativeVariance(value));
    }
    Ok(value)
}

/// Leading-order variance for `m` equal, separated groups: `n³(1 - 1/m²)/9`.
pub fn asymptotic_variance_separated_equal(n: usize, m: usize) -> f64 {
    let n = n as f64;
    let m = m as f64;
    n * n * n * (1.0 - 1.0 / (m * m)) / 9.0
}

/// Limits entering the general leading-order variance, evaluated at finite n.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticTerms {
    /// `Σ_k p_k³ / n³`.
    pub l_m: f64,
    /// `Σ_k Σ_{u≠k} p_k² p_u q[k][u] / n³`.
    pub l_o: f64,
    /// `n³ (1 - l_m - l_o) / 9`.
    pub value: f64,
}

/// General leading-order variance `n³(1 - l_m - l_o)/9` at the given sizes.
///
/// Diagnostic only. The overlap coefficient here is one, whereas expanding
/// the exact formula to leading order gives `n³(1 - l_m - 2 l_o)/9`; the two
/// are reported side by side rather than reconciled.
pub fn asymptotic_terms(group_sizes: &[usize], q: &QMatrix) -> AsymptoticTerms {
    let n: f64 = group_sizes.iter().sum::<usize>() as f64;
    let n3 = n * n * n;
    let l_m = group_sizes.iter().map(|&p| (p as f64).powi(3)).sum::<f64>() / n3;
    let mut l_o = 0.0;
    for (k, &pk) in group_sizes.iter().enumerate() {
        for (u, &pu) in group_sizes.iter().enumerate() {
            if u != k {
                l_o += (pk as f64).powi(2) * pu as f64 * q.get(k, u);
            }
        }
    }
    l_o /= n3;
    AsymptoticTerms {
        l_m,
        l_o,
        value: n3 * (1.0 - l_m - l_o) / 9.0,
    }
}

/// Empirical overlap fractions from the observed x-values.
///
/// `q[k][u]` is the fraction of triplets (unordered pair from `k`, one point
/// from `u`) where the `u` point lies strictly between the pair. Rows of
/// groups with fewer than two points stay zero.
pub fn estimate_q_empirical(ds: &GroupedDataset) -> QMatrix {
    let m = ds.m();
    let mut xs: Vec<Vec<f64>> = (0..m).map(|k| ds.group_x(k)).collect();
    for g in &mut xs {
        g.sort_unstable_by(f64::total_cmp);
    }
    let mut q = QMatrix::zeros(m);
    q.source = QSource::Empirical;
    for k in 0..m {
        let pk = xs[k].len();
        if pk < 2 {
            continue;
        }
        let pairs = (pk * (pk - 1) / 2) as f64;
        for u in (0..m).filter(|&u| u != k) {
            let mut between: u64 = 0;
            for &xs_u in &xs[u] {
                let below = xs[k].partition_point(|&v| v < xs_u);
                let above = pk - xs[k].partition_point(|&v| v <= xs_u);
                between += (below * above) as u64;
            }
            q.set(k, u, between as f64 / (pairs * xs[u].len() as f64));
        }
    }
    q
}

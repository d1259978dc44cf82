//! Grouped measurement data.
//!
//! A [`GroupedDataset`] holds `n` paired readings `(x, y)` of two measurement
//! methods, each tagged with the sample (group) it was taken from. Repeated
//! measurements of one sample share a group. Labels are opaque strings and are
//! mapped to dense indices `0..m` in order of first appearance.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};

/// One paired reading. `group` is the dense group index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Measurement {
    pub x: f64,
    pub y: f64,
    pub group: usize,
}

/// Validated grouped data. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupedDataset {
    points: Vec<Measurement>,
    labels: Vec<String>,
    group_sizes: Vec<usize>,
}

impl GroupedDataset {
    /// Builds a dataset from `(x, y, label)` rows.
    ///
    /// Labels are mapped to dense indices in first-appearance order and row
    /// order is preserved.
    pub fn from_rows<L, I>(rows: I) -> Result<Self>
    where
        L: ToString,
        I: IntoIterator<Item = (f64, f64, L)>,
    {
        let mut index: HashMap<String, usize> = HashMap::new();
        let mut labels = Vec::new();
        let mut group_sizes = Vec::new();
        let mut points = Vec::new();

        for (row, (x, y, label)) in rows.into_iter().enumerate() {
            if !x.is_finite() || !y.is_finite() {
                return Err(Error::NonFiniteValue(row));
            }
            let label = label.to_string();
            let group = match index.get(&label) {
                Some(&g) => g,
                None => {
                    let g = labels.len();
                    index.insert(label.clone(), g);
                    labels.push(label);
                    group_sizes.push(0);
                    g
                }
            };
            group_sizes[group] += 1;
            points.push(Measurement { x, y, group });
        }

        if points.is_empty() {
            return Err(Error::EmptyInput);
        }
        Ok(Self {
            points,
            labels,
            group_sizes,
        })
    }

    /// Builds a dataset from per-group point lists. Group `k` is labelled `"k"`.
    /// Empty groups are skipped.
    pub fn from_groups(groups: &[Vec<(f64, f64)>]) -> Result<Self> {
        let rows = groups
            .iter()
            .enumerate()
            .flat_map(|(k, pts)| pts.iter().map(move |&(x, y)| (x, y, k)));
        Self::from_rows(rows)
    }

    pub fn points(&self) -> &[Measurement] {
        &self.points
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, group: usize) -> &str {
        &self.labels[group]
    }

    /// Group sizes `p_1..p_m` indexed by dense group index.
    pub fn group_sizes(&self) -> &[usize] {
        &self.group_sizes
    }

    /// Total number of measurements.
    pub fn n(&self) -> usize {
        self.points.len()
    }

    /// Number of groups.
    pub fn m(&self) -> usize {
        self.group_sizes.len()
    }

    /// x-values of one group, in row order.
    pub fn group_x(&self, group: usize) -> Vec<f64> {
        self.points
            .iter()
            .filter(|p| p.group == group)
            .map(|p| p.x)
            .collect()
    }

    /// Applies `f` to every point, keeping groups and labels.
    pub fn map_points<F>(&self, f: F) -> Result<Self>
    where
        F: Fn(f64, f64) -> (f64, f64),
    {
        let mut out = self.clone();
        for (row, p) in out.points.iter_mut().enumerate() {
            let (x, y) = f(p.x, p.y);
            if !x.is_finite() || !y.is_finite() {
                return Err(Error::NonFiniteValue(row));
            }
            p.x = x;
            p.y = y;
        }
        Ok(out)
    }
}

/// Convenience wrapper around [`GroupedDataset::from_rows`].
pub fn build_dataset<L, I>(rows: I) -> Result<GroupedDataset>
where
    L: ToString,
    I: IntoIterator<Item = (f64, f64, L)>,
{
    GroupedDataset::from_rows(rows)
}

/// Observed separation of the groups on each axis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OverlapReport {
    pub nonoverlapping_x: bool,
    pub nonoverlapping_y: bool,
    /// Group pairs `(k, u)` with `k < u` whose x-ranges are not strictly separated.
    pub offending_pairs: Vec<(usize, usize)>,
    /// Same as `offending_pairs`, for the y-axis.
    pub offending_pairs_y: Vec<(usize, usize)>,
}

fn ranges(ds: &GroupedDataset, axis: impl Fn(&Measurement) -> f64) -> Vec<(f64, f64)> {
    let mut r = vec![(f64::INFINITY, f64::NEG_INFINITY); ds.m()];
    for p in ds.points() {
        let v = axis(p);
        let e = &mut r[p.group];
        e.0 = e.0.min(v);
        e.1 = e.1.max(v);
    }
    r
}

fn overlapping_pairs(r: &[(f64, f64)]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for k in 0..r.len() {
        for u in k + 1..r.len() {
            let separated = r[k].1 < r[u].0 || r[u].1 < r[k].0;
            if !separated {
                out.push((k, u));
            }
        }
    }
    out
}

/// Checks whether the observed groups are pairwise strictly separated.
///
/// Separation is strict: a group whose maximum equals another group's
/// minimum counts as overlapping.
pub fn check_overlap(ds: &GroupedDataset) -> OverlapReport {
    let offending_pairs = overlapping_pairs(&ranges(ds, |p| p.x));
    let offending_pairs_y = overlapping_pairs(&ranges(ds, |p| p.y));
    OverlapReport {
        nonoverlapping_x: offending_pairs.is_empty(),
        nonoverlapping_y: offending_pairs_y.is_empty(),
        offending_pairs,
        offending_pairs_y,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builds_dense_groups() {
        let ds = build_dataset(vec![(1.0, 1.1, "A"), (2.0, 2.1, "A"), (5.0, 5.2, "B")]).unwrap();
        assert_eq!(ds.m(), 2);
        assert_eq!(ds.group_sizes(), &[2, 1]);
        assert_eq!(ds.n(), 3);
        assert_eq!(ds.labels(), &["A".to_string(), "B".to_string()]);
    }

    #[test]
    fn singleton() {
        let ds = build_dataset(vec![(0.0, 0.0, "g")]).unwrap();
        assert_eq!((ds.m(), ds.n()), (1, 1));
        assert_eq!(ds.group_sizes(), &[1]);
    }

    #[test]
    fn rejects_nan_and_empty() {
        assert_eq!(
            build_dataset(vec![(1.0, f64::NAN, "A")]).unwrap_err(),
            Error::NonFiniteValue(0)
        );
        assert_eq!(
            build_dataset(vec![(1.0, 1.0, "A"), (f64::INFINITY, 1.0, "A")]).unwrap_err(),
            Error::NonFiniteValue(1)
        );
        let empty: Vec<(f64, f64, &str)> = Vec::new();
        assert_eq!(build_dataset(empty).unwrap_err(), Error::EmptyInput);
    }

    #[test]
    fn first_appearance_order_and_interleaving() {
        let ds = build_dataset(vec![(0.0, 0.0, 7), (1.0, 1.0, 3), (2.0, 2.0, 7)]).unwrap();
        assert_eq!(ds.label(0), "7");
        assert_eq!(ds.group_sizes(), &[2, 1]);
        let groups: Vec<usize> = ds.points().iter().map(|p| p.group).collect();
        assert_eq!(groups, vec![0, 1, 0]);
        assert_eq!(ds.group_x(0), vec![0.0, 2.0]);
    }

    #[test]
    fn duplicates_are_kept() {
        let ds = build_dataset(vec![(1.0, 1.0, "A"), (1.0, 1.0, "A")]).unwrap();
        assert_eq!(ds.n(), 2);
    }

    #[test]
    fn relabeling_gives_same_structure() {
        let a = build_dataset(vec![(1.0, 2.0, "A"), (3.0, 4.0, "B"), (5.0, 6.0, "A")]).unwrap();
        let b = build_dataset(vec![(1.0, 2.0, "zz"), (3.0, 4.0, "q"), (5.0, 6.0, "zz")]).unwrap();
        assert_eq!(a.points(), b.points());
        assert_eq!(a.group_sizes(), b.group_sizes());
    }

    #[test]
    fn overlap_disjoint() {
        let ds = build_dataset(vec![(1.0, 1.0, "A"), (2.0, 2.0, "A"), (5.0, 5.0, "B"), (6.0, 6.0, "B")])
            .unwrap();
        let r = check_overlap(&ds);
        assert!(r.nonoverlapping_x);
        assert!(r.nonoverlapping_y);
        assert!(r.offending_pairs.is_empty());
    }

    #[test]
    fn overlap_interleaved() {
        let ds = build_dataset(vec![(1.0, 1.0, "A"), (4.0, 4.0, "A"), (3.0, 3.0, "B"), (6.0, 6.0, "B")])
            .unwrap();
        let r = check_overlap(&ds);
        assert!(!r.nonoverlapping_x);
        assert_eq!(r.offending_pairs, vec![(0, 1)]);
    }

    #[test]
    fn overlap_touching_is_not_separated() {
        let ds = build_dataset(vec![(1.0, 0.0, "A"), (2.0, 0.0, "A"), (2.0, 9.0, "B")]).unwrap();
        let r = check_overlap(&ds);
        assert!(!r.nonoverlapping_x);
        assert!(r.nonoverlapping_y);
    }

    #[test]
    fn overlap_single_group_is_vacuous() {
        let ds = build_dataset(vec![(1.0, 1.0, "A"), (9.0, 0.0, "A")]).unwrap();
        let r = check_overlap(&ds);
        assert!(r.nonoverlapping_x && r.nonoverlapping_y);
    }

    #[test]
    fn overlap_report_independent_of_group_order() {
        let a = build_dataset(vec![(1.0, 1.0, "A"), (4.0, 4.0, "A"), (3.0, 3.0, "B")]).unwrap();
        let b = build_dataset(vec![(3.0, 3.0, "B"), (1.0, 1.0, "A"), (4.0, 4.0, "A")]).unwrap();
        assert_eq!(check_overlap(&a).offending_pairs, vec![(0, 1)]);
        assert_eq!(check_overlap(&b).offending_pairs, vec![(0, 1)]);
    }
}

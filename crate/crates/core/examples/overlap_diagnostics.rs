//! Observed group overlap and the empirical q matrix of a dataset.

use std::path::PathBuf;

use bpbr::cli::{diagnose, read_csv};

fn main() {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data/glucose_triplicates.csv")));
    let ds = read_csv(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let report = diagnose(&ds);

    println!("groups separated on x: {}", report.overlap.nonoverlapping_x);
    for pair in &report.overlapping_x {
        println!("  x ranges of {} and {} touch or overlap", pair.first, pair.second);
    }
    let q = &report.q_empirical;
    let mut worst = (0.0, 0, 0);
    for k in 0..q.m() {
        for u in 0..q.m() {
            if k != u && q.get(k, u) > worst.0 {
                worst = (q.get(k, u), k, u);
            }
        }
    }
    if q.is_zero() {
        println!("q is zero: no point falls between two points of another group");
    } else {
        println!(
            "largest q: {:.3} (pairs of {}, points of {}), total {:.3}",
            worst.0,
            ds.label(worst.1),
            ds.label(worst.2),
            q.off_diagonal_sum()
        );
    }
    let v = &report.variance;
    println!("V classic         {:.2}", v.classic);
    println!("V non-overlapping {:.2}", v.nonoverlapping);
    println!("V exact with q    {}", v.exact_with_q.map_or("negative".to_string(), |x| format!("{x:.2}")));
    println!("V leading order   {:.2}", v.asymptotic_terms.value);
}

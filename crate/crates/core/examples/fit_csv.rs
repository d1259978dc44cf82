//! Fit a grouped CSV file in block and classic mode.
//!
//! ```text
//! cargo run --example fit_csv -- [path/to/data.csv]
//! ```

use std::path::PathBuf;

use bpbr::cli::read_csv;
use bpbr::{equivalence_test, RegressionMode, VarianceSource};

fn main() {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data/glucose_triplicates.csv")));
    let ds = match read_csv(&path) {
        Ok(ds) => ds,
        Err(e) => {
            eprintln!("{}: {e}", path.display());
            std::process::exit(e.exit_code());
        }
    };
    println!("{} points in {} groups", ds.n(), ds.m());

    for mode in [RegressionMode::Block, RegressionMode::Classic] {
        match equivalence_test(&ds, mode, 0.05, VarianceSource::Conservative) {
            Ok(r) => println!(
                "{:<8} b = {:.4} [{:.4}, {:.4}]  a = {:.4} [{:.4}, {:.4}]  N = {} K = {}  {:?}",
                mode.name(),
                r.estimate.beta_hat,
                r.beta_ci.lower,
                r.beta_ci.upper,
                r.estimate.alpha_hat,
                r.alpha_ci.lower,
                r.alpha_ci.upper,
                r.estimate.n_slopes,
                r.estimate.offset,
                r.verdict
            ),
            Err(e) => println!("{:<8} {e}", mode.name()),
        }
    }
}

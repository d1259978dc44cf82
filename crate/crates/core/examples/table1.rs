//! The reference simulation grid: 4 slopes x 4 group layouts x 2 overlap
//! levels, classic and block mode side by side.
//!
//! ```text
//! cargo run --release --example table1 -- [replicates] [seed]
//! ```

use std::time::Instant;

use bpbr::simulation::{format_table1, table1_suite};

fn main() {
    let mut args = std::env::args().skip(1);
    let replicates: usize = args.next().map_or(200, |s| s.parse().expect("replicates"));
    let seed: u64 = args.next().map_or(42, |s| s.parse().expect("seed"));
    let start = Instant::now();
    let rows = table1_suite(replicates, seed).expect("grid");
    print!("{}", format_table1(&rows));
    eprintln!("{} cells, {replicates} replicates each, {:.1?}", rows.len(), start.elapsed());
}

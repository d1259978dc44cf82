//! Points, true line and both fitted lines for one replicate of the 180-20
//! design with slope 0.8, as CSV for an external plotting tool.
//!
//! ```text
//! cargo run --example plot_data > fig.csv
//! ```

use bpbr::simulation::{plot_data, Scenario};

fn main() {
    let replicate: u64 = std::env::args().nth(1).map_or(0, |s| s.parse().expect("replicate index"));
    let sc = Scenario::new(vec![180, 20], 0.8, 0.2, 1, 42);
    print!("{}", plot_data(&sc, replicate).expect("fit"));
}

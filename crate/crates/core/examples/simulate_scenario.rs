//! Coverage and power for a scenario read from TOML.
//!
//! ```text
//! cargo run --release --example simulate_scenario -- [scenario.toml]
//! ```

use bpbr::simulation::{format_summary, run_scenario, Scenario};

fn main() {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data/overlap_normal.toml").to_string());
    let text = std::fs::read_to_string(&path).expect("scenario file");
    let sc = Scenario::from_toml(&text).unwrap_or_else(|e| panic!("{path}: {e}"));
    let summary = run_scenario(&sc).expect("simulation");
    print!("{}", format_summary(&summary));
    for m in &summary.modes {
        println!(
            "{:<8} alpha coverage {:.3}, equivalent verdicts {:.3}",
            m.mode.name(),
            m.alpha_coverage,
            m.equivalent_rate
        );
    }
}

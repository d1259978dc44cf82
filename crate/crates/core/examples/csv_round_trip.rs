//! Write a simulated replicate to CSV, read it back and refit.

use bpbr::cli::{read_csv, write_csv};
use bpbr::simulation::{generate_dataset, table1_scenario};
use bpbr::{fit, RegressionMode};

fn main() {
    let sc = table1_scenario(0.98, "10x100", "high", 100, 42).expect("grid cell");
    let ds = generate_dataset(&sc, 0);
    let dir = std::env::temp_dir().join("bpbr-round-trip");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("replicate.csv");
    write_csv(&ds, &path).unwrap();
    let back = read_csv(&path).unwrap();

    let a = fit(&ds, RegressionMode::Block).unwrap();
    let b = fit(&back, RegressionMode::Block).unwrap();
    println!("wrote {} rows to {}", back.n(), path.display());
    println!("in memory b = {:?}, from file b = {:?}, identical: {}", a.beta_hat, b.beta_hat, a == b);
}

//! Pairwise slopes, the offset and sign counts on a small hand-made dataset.

use bpbr::slopes::{count_signs, enumerate_slopes, eligible_pairs, RegressionMode};
use bpbr::build_dataset;

fn main() {
    let ds = build_dataset(vec![
        (1.0, 1.1, "a"),
        (1.2, 0.9, "a"),
        (2.0, 2.2, "b"),
        (2.1, 1.9, "b"),
        (3.0, 3.1, "c"),
        (3.0, 2.8, "c"),
        (3.0, 3.4, "d"),
    ])
    .expect("valid rows");

    for mode in [RegressionMode::Block, RegressionMode::Classic, RegressionMode::TheilSen] {
        let ss = enumerate_slopes(&ds, mode).expect("slopes");
        let c = count_signs(&ss, 1.0);
        println!(
            "{:<9} pairs {:>2}  kept {:>2}  K {}  identical {}  minus-one {}  above 1: {}  below 1: {}  C = {}",
            mode.name(),
            eligible_pairs(&ds, mode),
            ss.len(),
            ss.offset(),
            ss.discarded_identical(),
            ss.discarded_minus_one(),
            c.above,
            c.below,
            c.c_tilde
        );
        let shown: Vec<String> = ss.slopes().iter().map(|s| format!("{s:.2}")).collect();
        println!("          {}", shown.join(" "));
    }
}

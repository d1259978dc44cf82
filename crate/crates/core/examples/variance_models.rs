//! Variance of the signed slope count under each model for a few designs.

use bpbr::variance::{
    asymptotic_terms, asymptotic_variance_separated_equal, variance_classic, variance_equal_groups,
    variance_exact, variance_nonoverlapping, QMatrix, QSource,
};

fn main() {
    let designs: [&[usize]; 5] = [&[1; 12], &[4, 4, 4], &[100, 100], &[180, 20], &[20; 30]];
    println!("{:<14} {:>12} {:>14} {:>14} {:>14}", "groups", "classic", "non-overlap", "q = 0.05", "asymptotic");
    for sizes in designs {
        let n: usize = sizes.iter().sum();
        let m = sizes.len();
        let mut q = QMatrix::zeros(m);
        q.source = QSource::AssumedZero;
        for k in 0..m {
            for u in 0..m {
                if k != u {
                    q.set(k, u, 0.05);
                }
            }
        }
        let overlapped = variance_exact(sizes, &q).map_or_else(|e| e.name().to_string(), |v| format!("{v:.2}"));
        let label = if m > 3 { format!("{}x{}", m, sizes[0]) } else { format!("{sizes:?}") };
        println!(
            "{:<14} {:>12.2} {:>14.2} {:>14} {:>14.2}",
            label,
            variance_classic(n),
            variance_nonoverlapping(sizes),
            overlapped,
            asymptotic_terms(sizes, &q).value
        );
    }

    println!();
    println!("equal groups, separated: exact vs leading order");
    for (m, p) in [(2, 10), (3, 200), (10, 100)] {
        let exact = variance_equal_groups(m, p, 0.0).unwrap();
        let approx = asymptotic_variance_separated_equal(m * p, m);
        println!("  m = {m:>2}, p = {p:>3}: {exact:>14.1} {approx:>14.1}  ratio {:.4}", exact / approx);
    }
}

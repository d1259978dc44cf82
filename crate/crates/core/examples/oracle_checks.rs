//! Compare the variance formulas with brute-force Monte Carlo.

use bpbr::oracle::{brute_force_q_scalar, mc_moments_of_c};
use bpbr::simulation::{ErrorDist, Scenario};
use bpbr::variance::{variance_exact, variance_nonoverlapping};

fn main() {
    let reps = 50_000;

    let mut separated = Scenario::new(vec![4, 4, 4], 1.0, 1.0, 1, 1);
    separated.error_dist = ErrorDist::Uniform;
    separated.true_x = Some(vec![10.0, 20.0, 30.0]);
    let m = mc_moments_of_c(&separated, 1.0, reps).unwrap();
    println!(
        "separated (4,4,4): simulated {:.2} +- {:.2}, formula {:.2}, skew {:+.3}",
        m.variance,
        m.se_variance,
        variance_nonoverlapping(&[4, 4, 4]),
        m.skewness
    );

    for sigma in [0.1, 0.2, 0.4] {
        let mut sc = Scenario::new(vec![4, 4], 1.0, sigma, 1, 2);
        sc.true_x = Some(vec![1.0, 2.0]);
        let q = brute_force_q_scalar(&[1.0, 2.0], ErrorDist::Normal, sigma, 200_000, 3);
        let exact = variance_exact(&[4, 4], &q).unwrap();
        let m = mc_moments_of_c(&sc, 1.0, reps).unwrap();
        println!(
            "overlap sigma {sigma}: q {:.4}/{:.4}, simulated {:.2} +- {:.2} (mean {:+.2}), exact-with-q {:.2}, non-overlap {:.2}",
            q.get(0, 1),
            q.get(1, 0),
            m.variance,
            m.se_variance,
            m.mean,
            exact,
            variance_nonoverlapping(&[4, 4])
        );
    }
}

//! Block-Passing-Bablok regression for grouped method-comparison data.
//!
//! Two measurement methods are compared on `m` samples, each measured
//! `p_k` times. Slopes between repeated measurements of the same sample carry
//! no information about the relationship between the methods, so block mode
//! only uses slopes between points of different groups. The crate provides
//!
//! - [`dataset`]: grouped data and the observed-overlap report,
//! - [`slopes`]: slope enumeration, offset `K` and sign counts,
//! - [`estimator`]: shifted-median slope and median-residual intercept,
//! - [`variance`]: exact and asymptotic variances of the signed slope count,
//! - [`inference`]: confidence intervals and the equivalence test,
//! - [`simulation`]: a seeded Monte Carlo harness for coverage and power,
//! - [`oracle`]: brute-force validators for the variance model,
//! - [`cli`]: the `bpbr` command-line front end.

pub mod cli;
pub mod dataset;
pub mod error;
pub mod estimator;
pub mod inference;
pub mod oracle;
pub mod simulation;
pub mod slopes;
pub mod variance;

pub use dataset::{build_dataset, check_overlap, GroupedDataset, Measurement, OverlapReport};
pub use error::{Error, Result};
pub use estimator::{estimate_alpha, estimate_beta, fit, PointEstimate};
pub use inference::{
    alpha_ci, beta_ci, equivalence_test, equivalence_test_with, normal_quantile, ConfidenceInterval,
    FitOptions, FitResult, VarianceSource, Verdict,
};
pub use oracle::{brute_force_q, brute_force_q_scalar, mc_moments_of_c, transform_check, CMoments};
pub use simulation::{generate_dataset, run_scenario, table1_suite, ErrorDist, ModeSummary, Scenario, SimSummary};
pub use slopes::{count_signs, enumerate_slopes, RegressionMode, SignCounts, SlopeOptions, SlopeSet};
pub use variance::{QMatrix, QSource, VarianceKind, VarianceModel};

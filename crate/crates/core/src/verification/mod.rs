//! Checks for the facts the secure mechanism relies on.
//!
//! Grid identities are verified exhaustively over exact rationals with no
//! tolerance. Distributional facts are verified by chi-square tests at
//! [`ALPHA`] with fixed seeds. The equivalence harness compares the secure
//! mechanism against the rounded floating-point reference.
//!
//! Floating point appears only in the analytic oracles and test statistics;
//! nothing float-valued is fed to the secure code path.
//!
//! Multiple testing: the full suite runs about 40 statistical checks at
//! `ALPHA = 0.001` and about a dozen three-sigma moment checks (two-sided
//! level 0.0027 each), so a fresh seed set would produce a spurious failure
//! with probability near 7%. Seeds are fixed, so results are reproducible
//! rather than flaky.

mod distributions;
mod equivalence;
mod exhaustive;
mod stats;
mod suite;

pub use distributions::{
    bernoulli_exp_mean, bernoulli_mean, check_refinement_consistency, check_scaled_geometric,
    check_truncated_geometric, geometric_gof, shuffle_gof, uniform_gof, RefinementReport,
    ScaledGeometricReport, MIN_SAMPLES,
};
pub use equivalence::{
    mechanism_equivalence, EquivalenceFixture, EquivalenceReport, TARGET_NOISE_FLOOR, TV_THRESHOLD,
};
pub use exhaustive::{
    check_refinement_identity, check_rounddown_sensitivity, check_rounding_identity, ExactReport,
};
pub use stats::{
    chi_square_gof, chi_square_gof_pmf, chi_square_independence, chi_square_sf,
    chi_square_two_sample, EmpiricalDistribution, GofReport, MomentCheck, Outcome, ALPHA,
};
pub use suite::{run_suite, CheckResult, Suite, SuiteOptions, SuiteReport, GEOMETRIC_CASES};

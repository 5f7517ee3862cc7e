//! Floating-point free Noisy Top-k with Gap.
//!
//! The mechanism reports the `k` queries with the largest noisy answers
//! together with the noisy gap from each to the next one, rounded down to a
//! target resolution `gamma_star = 1/d`. All secure-path arithmetic is on
//! integers and every random draw comes from raw bits, so the output
//! distribution does not depend on how a machine rounds floating-point
//! numbers.
//!
//! * [`bits`]: seeded bit streams with per-query substreams.
//! * [`sampling`]: exact uniform, Bernoulli, Bernoulli(exp(-s/t)), geometric
//!   and shuffle samplers.
//! * [`rational`] and [`scaled`]: exact fractions, grid values and rounding.
//! * [`mechanism`]: the secure mechanism and two floating-point comparators.
//! * [`verification`]: exhaustive and statistical checks of the rounding and
//!   sampling facts the mechanism relies on, plus the equivalence harness.
//!
//! ```
//! use gaptopk::{secure_top_k_gap, MechanismConfig, QueryVector, Rational};
//!
//! let q = QueryVector::from_counts(&[120, 95, 94, 40, 3], 10);
//! let cfg = MechanismConfig::new(2, "1/1".parse::<Rational>().unwrap())
//!     .unwrap()
//!     .with_seed(7);
//! let out = secure_top_k_gap(&q, &cfg).unwrap();
//! assert_eq!(out.selections.len(), 2);
//! for s in &out.selections {
//!     println!("query {} gap {}", s.index, s.gap);
//! }
//! ```

pub mod bits;
pub mod error;
pub mod mechanism;
pub mod rational;
pub mod sampling;
pub mod scaled;
pub mod verification;

pub use bits::{BitSource, Phase, RandomBits, StreamId, StreamKey};
pub use error::{Error, Result};
pub use mechanism::{
    has_tie, ideal_baseline_top_k_gap, prune_pool, rounded_reference_top_k_gap, secure_top_k_gap,
    secure_top_k_gap_with_key, select_top, IdealSelection, MechanismConfig, PhaseTimings,
    QueryVector, Selection, SelectionResult,
};
pub use rational::Rational;
pub use sampling::{ExpRate, Sampler, SamplerStats};
pub use scaled::{round_down_to, rounded_gap, GapValue, Resolution, ScaledValue};

//! Noisy Top-k with Gap in three variants:
//!
//! * [`secure_top_k_gap`]: the floating-point free mechanism. Integer query
//!   answers get exact geometric noise, ties among the leading `k + 2` are
//!   broken by refining the grid, and gaps are corrected with a random
//!   permutation. Optional early query pruning.
//! * [`rounded_reference_top_k_gap`]: continuous exponential noise in `f64`
//!   with gaps rounded down to `gamma_star`. **Insecure**; it exists only as a
//!   statistical oracle for the secure variant.
//! * [`ideal_baseline_top_k_gap`]: the unrounded `f64` mechanism.
//!   **Insecure**; benchmark comparator only.
//!
//! Query indices are 0-based throughout the library.

mod reference;
mod secure;
mod select;

use std::time::Duration;

use num_bigint::BigInt;
use num_traits::Signed;
use serde::{Deserialize, Serialize};

pub use reference::{ideal_baseline_top_k_gap, rounded_reference_top_k_gap, IdealSelection};
pub use secure::{secure_top_k_gap, secure_top_k_gap_with_key};
pub use select::{has_tie, prune_pool, select_top};

use crate::error::{invalid, Result};
use crate::rational::Rational;
use crate::sampling::SamplerStats;
use crate::scaled::{round_down_to, GapValue, Resolution};

pub const DEFAULT_MAX_REFINE_LEVEL: u32 = 64;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MechanismConfig {
    pub k: usize,
    pub epsilon: Rational,
    /// Target resolution `gamma_star = 1/d` and refine factor `M`; the level
    /// is ignored.
    pub resolution: Resolution,
    pub prune: bool,
    pub seed: u64,
    pub max_refine_level: u32,
}

impl MechanismConfig {
    /// `gamma_star = 1/10`, `M = 10`, pruning on, seed 0.
    pub fn new(k: usize, epsilon: Rational) -> Result<Self> {
        let cfg = Self {
            k,
            epsilon,
            resolution: Resolution::new(10, 10)?,
            prune: true,
            seed: 0,
            max_refine_level: DEFAULT_MAX_REFINE_LEVEL,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_resolution(mut self, base_denom: u64, refine_factor: u64) -> Result<Self> {
        self.resolution = Resolution::new(base_denom, refine_factor)?;
        Ok(self)
    }

    pub fn with_prune(mut self, prune: bool) -> Self {
        self.prune = prune;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_max_refine_level(mut self, level: u32) -> Self {
        self.max_refine_level = level;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(invalid("k must be positive"));
        }
        if !self.epsilon.is_positive() {
            return Err(invalid("epsilon must be positive"));
        }
        if self.max_refine_level == 0 {
            return Err(invalid("max refine level must be positive"));
        }
        Ok(())
    }

    pub fn base_denom(&self) -> u64 {
        self.resolution.base_denom()
    }

    pub fn refine_factor(&self) -> u64 {
        self.resolution.refine_factor()
    }
}

/// Query answers in units of `gamma_star`, i.e. already on the target grid.
///
/// Each underlying query must have sensitivity 1; that is the caller's
/// contract and is not checked.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QueryVector {
    units: Vec<BigInt>,
}

impl QueryVector {
    pub fn from_units<I, T>(units: I) -> Self
    where
        I: IntoIterator<Item = T>,
        T: Into<BigInt>,
    {
        Self {
            units: units.into_iter().map(Into::into).collect(),
        }
    }

    /// Integer counts scaled onto the grid `1/base_denom`.
    pub fn from_counts(counts: &[u64], base_denom: u64) -> Self {
        Self::from_units(counts.iter().map(|&c| BigInt::from(c) * base_denom))
    }

    /// Rounds arbitrary rational answers down onto the grid `1/base_denom`.
    pub fn round_down_from(values: &[Rational], base_denom: u64) -> Result<Self> {
        if base_denom == 0 {
            return Err(invalid("target resolution denominator must be positive"));
        }
        let gamma = Rational::new(1, base_denom)?;
        let scale = Rational::from_integer(base_denom);
        values
            .iter()
            .map(|v| Ok((&round_down_to(v, &gamma)? * &scale).floor()))
            .collect::<Result<Vec<_>>>()
            .map(|units| Self { units })
    }

    pub fn units(&self) -> &[BigInt] {
        &self.units
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    pub fn has_negative(&self) -> bool {
        self.units.iter().any(|u| u.is_negative())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Selection {
    pub index: usize,
    pub gap: GapValue,
}

/// Wall time per phase: initial noisy selection, tie resolution, gap
/// computation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseTimings {
    pub initial: Duration,
    pub ties: Duration,
    pub gaps: Duration,
}

impl PhaseTimings {
    pub fn total(&self) -> Duration {
        self.initial + self.ties + self.gaps
    }
}

#[derive(Clone, Debug)]
pub struct SelectionResult {
    pub selections: Vec<Selection>,
    /// Final refinement level `t` (0 when no tie had to be broken).
    pub refine_levels: u32,
    /// Number of queries that received refinement noise in each round.
    pub pool_sizes: Vec<usize>,
    pub stats: SamplerStats,
    pub timings: PhaseTimings,
}

impl SelectionResult {
    pub fn indices(&self) -> Vec<usize> {
        self.selections.iter().map(|s| s.index).collect()
    }

    pub fn gaps(&self) -> Vec<GapValue> {
        self.selections.iter().map(|s| s.gap.clone()).collect()
    }
}

fn check_sizes(n: usize, k: usize) -> Result<()> {
    if n < k + 1 {
        return Err(invalid(format!(
            "need at least k + 1 = {} queries, got {n}",
            k + 1
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        let one: Rational = "1".parse().unwrap();
        assert!(MechanismConfig::new(0, one.clone()).is_err());
        assert!(MechanismConfig::new(1, Rational::zero()).is_err());
        assert!(MechanismConfig::new(1, "-1/2".parse().unwrap()).is_err());
        let cfg = MechanismConfig::new(3, one).unwrap();
        assert_eq!((cfg.base_denom(), cfg.refine_factor()), (10, 10));
        assert!(cfg.clone().with_resolution(10, 1).is_err());
        assert!(cfg.with_max_refine_level(0).validate().is_err());
    }

    #[test]
    fn query_vectors() {
        let q = QueryVector::from_counts(&[3, 0, 12], 10);
        assert_eq!(q.units(), &[30.into(), 0.into(), 120.into()]);
        let vals: Vec<Rational> = ["47/20", "-1/20", "3"]
            .iter()
            .map(|s| s.parse().unwrap())
            .collect();
        let q = QueryVector::round_down_from(&vals, 10).unwrap();
        assert_eq!(q.units(), &[23.into(), (-1).into(), 30.into()]);
        assert!(q.has_negative());
    }
}

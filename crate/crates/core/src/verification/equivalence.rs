//! Secure mechanism against the rounded floating-point reference.
//!
//! Both mechanisms run `runs` times on independent seeds. Outputs are binned
//! identically on both sides: gaps above the pooled 99.9th percentile share a
//! tail cell, and gap buckets are widened (doubling) until the expected total
//! variation between two samples of the same law, roughly
//! `sum_c sqrt(p_c) / sqrt(pi N)`, is at most [`TARGET_NOISE_FLOOR`]. The
//! binning is a function of the pooled sample only, never of the difference
//! between the two sides.

use std::thread;

use serde::{Deserialize, Serialize};

use super::stats::{chi_square_two_sample, EmpiricalDistribution, GofReport, MomentCheck, Outcome};
use crate::error::{invalid, Result};
use crate::mechanism::{
    rounded_reference_top_k_gap, secure_top_k_gap, MechanismConfig, QueryVector, SelectionResult,
};
use crate::rational::Rational;

pub const TV_THRESHOLD: f64 = 0.02;
pub const TARGET_NOISE_FLOOR: f64 = 0.01;
const TAIL_QUANTILE: f64 = 0.999;
/// Seed offset separating the reference runs from the secure runs.
const REFERENCE_SEED_OFFSET: u64 = 1 << 63;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EquivalenceFixture {
    pub name: String,
    /// Query answers as integers; scaled onto the `1/base_denom` grid.
    pub counts: Vec<u64>,
    pub k: usize,
    pub epsilon: Rational,
    pub base_denom: u64,
    pub refine_factor: u64,
}

impl EquivalenceFixture {
    pub fn config(&self) -> Result<MechanismConfig> {
        MechanismConfig::new(self.k, self.epsilon.clone())?
            .with_resolution(self.base_denom, self.refine_factor)
    }

    pub fn queries(&self) -> QueryVector {
        QueryVector::from_counts(&self.counts, self.base_denom)
    }

    /// Closed-form law of the first selected index, where one is known.
    pub fn first_index_law(&self) -> Option<Vec<f64>> {
        let n = self.counts.len();
        if self.counts.iter().all(|&c| c == self.counts[0]) {
            return Some(vec![1.0 / n as f64; n]);
        }
        if n == 2 && self.k == 1 {
            // P(E_lo - E_hi > diff) for i.i.d. Exp(b), b = 2k/eps
            let eps = self.epsilon.as_big_rational();
            let eps = num_traits::ToPrimitive::to_f64(eps).unwrap();
            let (hi, lo) = (
                self.counts[0].max(self.counts[1]),
                self.counts[0].min(self.counts[1]),
            );
            let upset = 0.5 * (-(eps * (hi - lo) as f64) / 2.0).exp();
            return Some(if self.counts[0] >= self.counts[1] {
                vec![1.0 - upset, upset]
            } else {
                vec![upset, 1.0 - upset]
            });
        }
        None
    }

    /// The three standard fixtures: distinct values, all-equal values and a
    /// two-query extreme gap.
    pub fn standard() -> Vec<Self> {
        let two: Rational = Rational::from_integer(2);
        let one: Rational = Rational::from_integer(1);
        vec![
            Self {
                name: "distinct".into(),
                counts: vec![3, 2, 1, 0, 0],
                k: 2,
                epsilon: two,
                base_denom: 2,
                refine_factor: 2,
            },
            Self {
                name: "all-equal".into(),
                counts: vec![2, 2, 2],
                k: 1,
                epsilon: one.clone(),
                base_denom: 2,
                refine_factor: 2,
            },
            Self {
                name: "extreme-gap".into(),
                counts: vec![10, 0],
                k: 1,
                epsilon: one,
                base_denom: 2,
                refine_factor: 2,
            },
        ]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub fixture: String,
    pub runs: u64,
    pub tv: f64,
    pub threshold: f64,
    /// Expected TV between two samples of one law under the final binning.
    pub noise_floor: f64,
    /// Width of a gap bucket, in `gamma_star` units.
    pub bucket_width: u64,
    /// Gaps above this many `gamma_star` units share the tail cell.
    pub tail_cutoff: u64,
    pub cells: usize,
    pub chi_square: GofReport,
    pub marginals: Vec<MomentCheck>,
    /// `tv < threshold`, the chi-square test and every marginal check.
    pub pass: bool,
}

fn outcome(r: &SelectionResult) -> Outcome {
    Outcome {
        indices: r.indices(),
        gaps: r
            .selections
            .iter()
            .map(|s| num_traits::ToPrimitive::to_u64(s.gap.units()).unwrap_or(Outcome::TAIL - 1))
            .collect(),
    }
}

/// Runs `runs` seeded executions of `mechanism` across worker threads and
/// merges the per-worker distributions.
fn sample(
    runs: u64,
    seed_base: u64,
    mechanism: impl Fn(u64) -> Result<SelectionResult> + Sync,
) -> Result<EmpiricalDistribution> {
    let workers = thread::available_parallelism().map_or(1, |n| n.get()) as u64;
    let chunk = runs.div_ceil(workers.max(1));
    thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let mechanism = &mechanism;
                scope.spawn(move || -> Result<EmpiricalDistribution> {
                    let mut dist = EmpiricalDistribution::new();
                    let end = ((w + 1) * chunk).min(runs);
                    for r in (w * chunk).min(end)..end {
                        dist.record(outcome(&mechanism(seed_base.wrapping_add(r))?));
                    }
                    Ok(dist)
                })
            })
            .collect();
        let mut all = EmpiricalDistribution::new();
        for h in handles {
            all.merge(h.join().expect("worker panicked")?);
        }
        Ok(all)
    })
}

fn bucket(o: &Outcome, width: u64, cutoff: u64) -> Outcome {
    Outcome {
        indices: o.indices.clone(),
        gaps: o
            .gaps
            .iter()
            .map(|&g| if g > cutoff { Outcome::TAIL } else { g / width })
            .collect(),
    }
}

fn tail_cutoff(a: &EmpiricalDistribution, b: &EmpiricalDistribution) -> u64 {
    let mut gaps: Vec<(u64, u64)> = Vec::new();
    for d in [a, b] {
        for (o, &c) in d.counts() {
            gaps.extend(o.gaps.iter().map(|&g| (g, c)));
        }
    }
    gaps.sort_unstable();
    let total: u64 = gaps.iter().map(|g| g.1).sum();
    let target = (total as f64 * TAIL_QUANTILE).ceil() as u64;
    let mut seen = 0;
    for (g, c) in gaps {
        seen += c;
        if seen >= target {
            return g;
        }
    }
    0
}

fn noise_floor(pooled: &EmpiricalDistribution, per_side: u64) -> f64 {
    let total = pooled.total() as f64;
    pooled
        .counts()
        .values()
        .map(|&c| (c as f64 / total).sqrt())
        .sum::<f64>()
        / (std::f64::consts::PI * per_side as f64).sqrt()
}

fn first_index_checks(label: &str, dist: &EmpiricalDistribution, law: &[f64]) -> Vec<MomentCheck> {
    law.iter()
        .enumerate()
        .map(|(i, &p)| {
            let hits: u64 = dist
                .counts()
                .iter()
                .filter(|(o, _)| o.indices.first() == Some(&i))
                .map(|(_, &c)| c)
                .sum();
            MomentCheck::proportion(
                format!("{label} P(first = {})", i + 1),
                hits,
                dist.total(),
                p,
            )
        })
        .collect()
}

/// Compares the secure mechanism with the rounded reference on one fixture.
pub fn mechanism_equivalence(
    fixture: &EquivalenceFixture,
    runs: u64,
    seed: u64,
) -> Result<EquivalenceReport> {
    if runs == 0 {
        return Err(invalid("need at least one run"));
    }
    let cfg = fixture.config()?;
    let q = fixture.queries();
    let secure = sample(runs, seed, |s| {
        secure_top_k_gap(&q, &cfg.clone().with_seed(s))
    })?;
    let reference = sample(runs, seed.wrapping_add(REFERENCE_SEED_OFFSET), |s| {
        rounded_reference_top_k_gap(&q, &cfg.clone().with_seed(s))
    })?;

    let cutoff = tail_cutoff(&secure, &reference);
    let mut width = 1;
    let (binned_s, binned_r, floor) = loop {
        let bs = secure.map(|o| bucket(o, width, cutoff));
        let br = reference.map(|o| bucket(o, width, cutoff));
        let mut pooled = bs.clone();
        pooled.merge(br.clone());
        let floor = noise_floor(&pooled, runs);
        if floor <= TARGET_NOISE_FLOOR || width > cutoff {
            break (bs, br, floor);
        }
        width *= 2;
    };
    let tv = binned_s.tv_distance(&binned_r);
    let (a, b) = binned_s.aligned_counts(&binned_r);
    let chi_square = chi_square_two_sample(&a, &b);
    let mut marginals = Vec::new();
    if let Some(law) = fixture.first_index_law() {
        marginals.extend(first_index_checks("secure", &secure, &law));
        marginals.extend(first_index_checks("reference", &reference, &law));
    }
    let pass = tv < TV_THRESHOLD && chi_square.pass && marginals.iter().all(|m| m.pass);
    Ok(EquivalenceReport {
        fixture: fixture.name.clone(),
        runs,
        tv,
        threshold: TV_THRESHOLD,
        noise_floor: floor,
        bucket_width: width,
        tail_cutoff: cutoff,
        cells: a.len(),
        chi_square,
        marginals,
        pass,
    })
}

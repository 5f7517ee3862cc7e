//! Goodness-of-fit checks for the exact samplers and the distributional
//! facts the secure mechanism is built on.

use std::collections::BTreeMap;

use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use super::exhaustive::{check_refinement_identity, ExactReport};
use super::stats::{
    chi_square_gof, chi_square_gof_pmf, chi_square_independence, GofReport, MomentCheck,
};
use crate::bits::{BitSource, Phase, StreamId};
use crate::error::{invalid, Result};
use crate::rational::Rational;
use crate::sampling::{ExpRate, Sampler};
use crate::scaled::Resolution;

/// Smallest sample size accepted by the distributional checks.
pub const MIN_SAMPLES: u64 = 100_000;

fn sampler(seed: u64) -> Sampler<BitSource> {
    Sampler::new(BitSource::seeded(seed, StreamId::new(0, Phase::Level(0))))
}

fn check_samples(n: u64) -> Result<()> {
    if n < MIN_SAMPLES {
        return Err(invalid(format!(
            "need at least {MIN_SAMPLES} samples, got {n}"
        )));
    }
    Ok(())
}

/// `s/t` as an `f64`, for analytic oracles only.
fn ratio(rate: &ExpRate) -> f64 {
    rate.numer().to_f64().unwrap() / rate.denom().to_f64().unwrap()
}

fn rate_from(r: &Rational) -> Result<ExpRate> {
    if !r.is_positive() {
        return Err(invalid("rate must be positive"));
    }
    ExpRate::new(
        r.numer().to_biguint().expect("positive"),
        r.denom().to_biguint().expect("positive"),
    )
}

fn histogram(n: u64, mut draw: impl FnMut() -> Result<u64>) -> Result<BTreeMap<u64, u64>> {
    let mut h = BTreeMap::new();
    for _ in 0..n {
        *h.entry(draw()?).or_insert(0) += 1;
    }
    Ok(h)
}

fn geometric_pmf(p: f64) -> impl Fn(u64) -> f64 {
    move |m| p * (1.0 - p).powf(m as f64)
}

/// `geometric(s, t)` against `Geom(1 - exp(-s/t))`.
pub fn geometric_gof(s: u64, t: u64, n: u64, seed: u64) -> Result<GofReport> {
    let rate = ExpRate::new(s, t)?;
    let mut smp = sampler(seed);
    let h = histogram(n, || {
        smp.geometric_rate(&rate)?
            .to_u64()
            .ok_or_else(|| invalid("geometric sample beyond u64"))
    })?;
    let p = -(-ratio(&rate)).exp_m1();
    Ok(chi_square_gof_pmf(&h, n, geometric_pmf(p)))
}

/// Success frequency of `bernoulli_exp_neg(s, t)` against `exp(-s/t)`.
pub fn bernoulli_exp_mean(s: u64, t: u64, n: u64, seed: u64) -> Result<MomentCheck> {
    let rate = ExpRate::new(s, t)?;
    let mut smp = sampler(seed);
    let hits = (0..n).filter(|_| smp.bernoulli_exp_neg_rate(&rate)).count() as u64;
    Ok(MomentCheck::proportion(
        format!("bernoulli_exp_neg({s},{t})"),
        hits,
        n,
        (-ratio(&rate)).exp(),
    ))
}

/// Success frequency of `bernoulli_rational(num, den)`.
pub fn bernoulli_mean(num: u64, den: u64, n: u64, seed: u64) -> Result<MomentCheck> {
    let mut smp = sampler(seed);
    let mut hits = 0;
    for _ in 0..n {
        hits += u64::from(smp.bernoulli_rational(num, den)?);
    }
    Ok(MomentCheck::proportion(
        format!("bernoulli({num}/{den})"),
        hits,
        n,
        num as f64 / den as f64,
    ))
}

/// `uniform_below(bound)` against the discrete uniform law.
pub fn uniform_gof(bound: u64, n: u64, seed: u64) -> Result<GofReport> {
    let mut smp = sampler(seed);
    let mut observed = vec![0u64; bound as usize];
    for _ in 0..n {
        observed[smp.uniform_below(bound)? as usize] += 1;
    }
    let expected = vec![n as f64 / bound as f64; bound as usize];
    Ok(chi_square_gof(&observed, &expected))
}

/// Fisher-Yates on `len` items against the uniform law on permutations.
pub fn shuffle_gof(len: usize, n: u64, seed: u64) -> Result<GofReport> {
    if !(1..=6).contains(&len) {
        return Err(invalid("shuffle check supports 1 to 6 items"));
    }
    let mut smp = sampler(seed);
    let mut counts: BTreeMap<Vec<usize>, u64> = BTreeMap::new();
    for _ in 0..n {
        let mut items: Vec<usize> = (0..len).collect();
        smp.shuffle(&mut items);
        *counts.entry(items).or_insert(0) += 1;
    }
    let cells: u64 = (1..=len as u64).product();
    let mut observed: Vec<u64> = counts.into_values().collect();
    observed.resize(cells as usize, 0);
    let expected = vec![n as f64 / cells as f64; cells as usize];
    Ok(chi_square_gof(&observed, &expected))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaledGeometricReport {
    pub gof: GofReport,
    /// Mean of the scaled samples against `gamma (1 - p) / p`.
    pub mean: MomentCheck,
    /// Most frequent multiple of `gamma`; the PMF peaks at zero.
    pub mode: u64,
    pub pass: bool,
}

/// Samples `gamma * geometric(s, t)` with `s/t = gamma/beta` and fits the
/// scaled geometric law on `{0, gamma, 2 gamma, ...}` with `p = 1 - exp(-gamma/beta)`.
pub fn check_scaled_geometric(
    beta: &Rational,
    gamma: &Rational,
    n: u64,
    seed: u64,
) -> Result<ScaledGeometricReport> {
    check_samples(n)?;
    if !beta.is_positive() {
        return Err(invalid("scale must be positive"));
    }
    let rate = rate_from(&(gamma / beta))?;
    let mut smp = sampler(seed);
    let h = histogram(n, || {
        smp.geometric_rate(&rate)?
            .to_u64()
            .ok_or_else(|| invalid("geometric sample beyond u64"))
    })?;
    let p = -(-ratio(&rate)).exp_m1();
    let gof = chi_square_gof_pmf(&h, n, geometric_pmf(p));
    let g = gamma.as_big_rational().to_f64().unwrap();
    let sum: f64 = h.iter().map(|(&v, &c)| v as f64 * c as f64).sum();
    let mean = MomentCheck::new(
        "scaled mean",
        g * sum / n as f64,
        g * (1.0 - p) / p,
        g * ((1.0 - p) / (p * p) / n as f64).sqrt(),
    );
    let mode = h
        .iter()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
        .map_or(0, |(&v, _)| v);
    let pass = gof.pass && mean.pass && mode == 0;
    Ok(ScaledGeometricReport {
        gof,
        mean,
        mode,
        pass,
    })
}

/// `geometric(s, t) mod M` against `p (1-p)^m / (1 - (1-p)^M)` on
/// `{0, ..., M-1}`. `M = 1` degenerates to the constant zero.
pub fn check_truncated_geometric(s: u64, t: u64, m: u64, n: u64, seed: u64) -> Result<GofReport> {
    if m == 0 {
        return Err(invalid("modulus must be positive"));
    }
    let rate = ExpRate::new(s, t)?;
    let mut smp = sampler(seed);
    let mut observed = vec![0u64; m as usize];
    for _ in 0..n {
        let r = smp.geometric_mod(&rate, m)?;
        match observed.get_mut(r as usize) {
            Some(c) => *c += 1,
            None => return Ok(GofReport::trivial(false)),
        }
    }
    if m == 1 {
        return Ok(GofReport::trivial(observed[0] == n));
    }
    let p = -(-ratio(&rate)).exp_m1();
    let norm = -((m as f64) * (1.0 - p).ln()).exp_m1();
    let expected: Vec<f64> = (0..m)
        .map(|k| n as f64 * p * (1.0 - p).powf(k as f64) / norm)
        .collect();
    Ok(chi_square_gof(&observed, &expected))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefinementReport {
    pub exact: ExactReport,
    /// Fine-grid increment against the truncated geometric law.
    pub increment: GofReport,
    /// Coarse value bucket against increment.
    pub independence: GofReport,
    pub pass: bool,
}

/// Refinement consistency for `X ~ Exp(beta)` between grids `gamma1` and
/// `gamma2 = gamma1 / M`.
///
/// Exact part: [`check_refinement_identity`] with 10 000 checks. Statistical
/// part: draw the fine-grid value `Y = floor(X / gamma2) ~ Geom(1 - exp(-gamma2/beta))`
/// directly, split it as `Y = M * C + I`, and test that `I` follows the
/// truncated geometric law on `{0, ..., M-1}` independently of `C`. This is
/// what licenses drawing the refinement increment separately from the coarse
/// noise.
pub fn check_refinement_consistency(
    gamma1: &Rational,
    refine_factor: u64,
    beta: &Rational,
    n: u64,
    seed: u64,
) -> Result<RefinementReport> {
    check_samples(n)?;
    if refine_factor < 2 {
        return Err(invalid("refine factor must be at least 2"));
    }
    if !beta.is_positive() {
        return Err(invalid("scale must be positive"));
    }
    let d = gamma1
        .reciprocal_integer()
        .and_then(|d| d.to_u64())
        .ok_or_else(|| invalid(format!("{gamma1} is not 1/d for an integer d")))?;
    let exact = check_refinement_identity(Resolution::new(d, refine_factor)?, 5_000, seed)?;

    let gamma2 = gamma1 / &Rational::from_integer(refine_factor);
    let rate = rate_from(&(&gamma2 / beta))?;
    let mut smp = sampler(seed ^ 0x5eed);
    let m = refine_factor as usize;
    let mut increments = vec![0u64; m];
    let mut table: Vec<Vec<u64>> = Vec::new();
    for _ in 0..n {
        let y = smp
            .geometric_rate(&rate)?
            .to_u64()
            .ok_or_else(|| invalid("geometric sample beyond u64"))?;
        let (c, i) = ((y / refine_factor) as usize, (y % refine_factor) as usize);
        increments[i] += 1;
        if table.len() <= c {
            table.resize(c + 1, vec![0; m]);
        }
        table[c][i] += 1;
    }
    let p = -(-ratio(&rate)).exp_m1();
    let norm = -((m as f64) * (1.0 - p).ln()).exp_m1();
    let expected: Vec<f64> = (0..m)
        .map(|k| n as f64 * p * (1.0 - p).powf(k as f64) / norm)
        .collect();
    let increment = chi_square_gof(&increments, &expected);
    let independence = chi_square_independence(&table);
    let pass = exact.pass() && increment.pass && independence.pass;
    Ok(RefinementReport {
        exact,
        increment,
        independence,
        pass,
    })
}

//! Continuous-noise variants in binary floating point.
//!
//! Both are vulnerable to floating-point side channels and must not be used
//! to release data. The rounded variant is the statistical oracle for the
//! secure mechanism; the ideal variant is the timing baseline.

use std::time::Instant;

use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::Exp1;

use super::select::select_among;
use super::{check_sizes, MechanismConfig, PhaseTimings, QueryVector, Selection, SelectionResult};
use crate::error::{invalid, Result};
use crate::sampling::SamplerStats;
use crate::scaled::GapValue;

/// Noise scale `2k/eps` as an `f64`.
fn noise_scale(cfg: &MechanismConfig) -> Result<f64> {
    let eps = cfg
        .epsilon
        .as_big_rational()
        .to_f64()
        .filter(|e| e.is_finite() && *e > 0.0)
        .ok_or_else(|| invalid("epsilon not representable as a positive f64"))?;
    Ok(2.0 * cfg.k as f64 / eps)
}

fn float_units(q: &QueryVector) -> Result<Vec<f64>> {
    q.units()
        .iter()
        .map(|u| {
            u.to_f64()
                .ok_or_else(|| invalid("query answer too large for f64"))
        })
        .collect()
}

/// Insecure test oracle: `Exp(2k/eps)` noise by inverse CDF in `f64`, top
/// `k + 1`, gaps rounded down to multiples of `gamma_star`.
pub fn rounded_reference_top_k_gap(
    q: &QueryVector,
    cfg: &MechanismConfig,
) -> Result<SelectionResult> {
    cfg.validate()?;
    check_sizes(q.len(), cfg.k)?;
    let start = Instant::now();
    let d = cfg.base_denom();
    // Work in gamma_star units so the final floor needs no rescaling.
    let scale = noise_scale(cfg)? * d as f64;
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
    let noisy: Vec<f64> = float_units(q)?
        .into_iter()
        .map(|u| {
            let v: f64 = rng.random();
            u - scale * (1.0 - v).ln()
        })
        .collect();
    let keys: Vec<OrderedF64> = noisy.iter().copied().map(OrderedF64).collect();
    let top = select_among(&keys, (0..q.len()).collect(), cfg.k + 1);
    let initial = start.elapsed();

    let start = Instant::now();
    let selections = (0..cfg.k)
        .map(|i| {
            let diff = (noisy[top[i]] - noisy[top[i + 1]]).floor().max(0.0);
            Ok(Selection {
                index: top[i],
                gap: GapValue::new(diff as u64, d)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SelectionResult {
        selections,
        refine_levels: 0,
        pool_sizes: Vec::new(),
        stats: SamplerStats::default(),
        timings: PhaseTimings {
            initial,
            ties: Default::default(),
            gaps: start.elapsed(),
        },
    })
}

/// Output of the unrounded baseline: indices and real-valued gaps.
#[derive(Clone, Debug, PartialEq)]
pub struct IdealSelection {
    pub indices: Vec<usize>,
    pub gaps: Vec<f64>,
}

/// Insecure benchmark comparator: `Exp(2k/eps)` noise, top `k + 1`, raw gaps.
pub fn ideal_baseline_top_k_gap(q: &QueryVector, cfg: &MechanismConfig) -> Result<IdealSelection> {
    cfg.validate()?;
    check_sizes(q.len(), cfg.k)?;
    let scale = noise_scale(cfg)?;
    let d = cfg.base_denom() as f64;
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
    let noisy: Vec<OrderedF64> = float_units(q)?
        .into_iter()
        .map(|u| {
            let e: f64 = rng.sample(Exp1);
            OrderedF64(u / d + scale * e)
        })
        .collect();
    let top = select_among(&noisy, (0..q.len()).collect(), cfg.k + 1);
    let gaps = top
        .windows(2)
        .map(|w| noisy[w[0]].0 - noisy[w[1]].0)
        .collect();
    let mut indices = top;
    indices.truncate(cfg.k);
    Ok(IdealSelection { indices, gaps })
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct OrderedF64(f64);

impl Eq for OrderedF64 {}

impl PartialOrd for OrderedF64 {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OrderedF64 {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

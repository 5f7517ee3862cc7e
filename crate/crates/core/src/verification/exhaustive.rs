//! Zero-tolerance checks over finite rational grids.

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use crate::bits::{BitSource, Phase, StreamId};
use crate::error::{invalid, Result};
use crate::rational::Rational;
use crate::sampling::Sampler;
use crate::scaled::{round_down_to, Resolution, ScaledValue};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExactReport {
    pub checked: u64,
    /// First failing case, if any.
    pub counterexample: Option<String>,
}

impl ExactReport {
    pub fn pass(&self) -> bool {
        self.counterexample.is_none()
    }
}

/// `0, step, 2 step, ..., <= max`.
fn grid(step: &Rational, max: &Rational) -> Result<Vec<Rational>> {
    if !step.is_positive() {
        return Err(invalid("grid step must be positive"));
    }
    let count = (max / step).floor();
    let count: u64 = count
        .try_into()
        .map_err(|_| invalid("grid range must be non-negative"))?;
    Ok((0..=count)
        .map(|j| &Rational::from_integer(j) * step)
        .collect())
}

fn require_divides(step: &Rational, gamma: &Rational) -> Result<()> {
    if !step.is_positive() || !gamma.is_positive() || !(gamma / step).is_integer() {
        return Err(invalid(format!("grid step {step} must divide {gamma}")));
    }
    Ok(())
}

/// Checks `floor(a - b) = floor(a) - floor(b) - delta * gamma` (all floors to
/// multiples of `gamma`) for every ordered pair of grid points in
/// `[0, range_max]`, where `delta = 1` iff the remainder of `a` is below the
/// remainder of `b`.
pub fn check_rounding_identity(
    grid_step: &Rational,
    range_max: &Rational,
    gamma: &Rational,
) -> Result<ExactReport> {
    require_divides(grid_step, gamma)?;
    let points = grid(grid_step, range_max)?;
    let floors: Vec<Rational> = points
        .iter()
        .map(|x| round_down_to(x, gamma))
        .collect::<Result<_>>()?;
    let rems: Vec<Rational> = points.iter().zip(&floors).map(|(x, f)| x - f).collect();
    let mut checked = 0;
    for (i, a) in points.iter().enumerate() {
        for (j, b) in points.iter().enumerate() {
            let lhs = round_down_to(&(a - b), gamma)?;
            let mut rhs = &floors[i] - &floors[j];
            if rems[i] < rems[j] {
                rhs = &rhs - gamma;
            }
            checked += 1;
            if lhs != rhs {
                return Ok(ExactReport {
                    checked,
                    counterexample: Some(format!("a={a} b={b}: {lhs} != {rhs}")),
                });
            }
        }
    }
    Ok(ExactReport {
        checked,
        counterexample: None,
    })
}

/// Checks `|floor(x) - floor(y)| <= delta` (floors to multiples of `gamma`)
/// for every pair of grid points in `[0, range_max]` with `|x - y| <= delta`.
pub fn check_rounddown_sensitivity(
    delta: u64,
    gamma: &Rational,
    grid_step: &Rational,
    range_max: &Rational,
) -> Result<ExactReport> {
    if delta == 0 {
        return Err(invalid("sensitivity must be positive"));
    }
    let d = Rational::from_integer(delta);
    if !gamma.is_positive() || !(&d / gamma).is_integer() {
        return Err(invalid(format!(
            "sensitivity {delta} must be a multiple of {gamma}"
        )));
    }
    require_divides(grid_step, gamma)?;
    let points = grid(grid_step, range_max)?;
    let floors: Vec<Rational> = points
        .iter()
        .map(|x| round_down_to(x, gamma))
        .collect::<Result<_>>()?;
    let mut checked = 0;
    for (i, x) in points.iter().enumerate() {
        for (j, y) in points.iter().enumerate() {
            if (x - y).abs() > d {
                continue;
            }
            checked += 1;
            let moved = (&floors[i] - &floors[j]).abs();
            if moved > d {
                return Ok(ExactReport {
                    checked,
                    counterexample: Some(format!("x={x} y={y}: rounded values move by {moved}")),
                });
            }
        }
    }
    Ok(ExactReport {
        checked,
        counterexample: None,
    })
}

/// Exact half of the refinement check, over `count` pseudo-random cases:
///
/// * refining a level-`t` value by any increment below `M` and coarsening back
///   returns the original units;
/// * rounding a rational down to level `t + 1` and then coarsening to level
///   `t` equals rounding it down to level `t` directly.
pub fn check_refinement_identity(base: Resolution, count: u64, seed: u64) -> Result<ExactReport> {
    let m = base.refine_factor();
    let mut rng = Sampler::new(BitSource::seeded(seed, StreamId::new(0, Phase::Level(0))));
    let mut checked = 0;
    for case in 0..count {
        let level = (case % 4) as u32;
        let res = base.at_level(level);
        let sign: i64 = if rng.uniform_below(2)? == 1 { -1 } else { 1 };
        let units = BigInt::from(rng.uniform_below(1 << 40)?) * sign;
        let inc = rng.uniform_below(m)?;
        let v = ScaledValue::new(units.clone(), res);
        let back = v.refine(inc)?.coarsen(level)?;
        checked += 1;
        if back.units() != &units {
            return Ok(ExactReport {
                checked,
                counterexample: Some(format!(
                    "units {units} at level {level} refined by {inc} came back as {}",
                    back.units()
                )),
            });
        }

        let den = rng.uniform_below(1_000_000)? + 1;
        let num = BigInt::from(rng.uniform_below(1 << 40)?) * sign;
        let x = Rational::new(num, den)?;
        let fine = ScaledValue::round_down(&x, res.refined()).coarsen(level)?;
        let coarse = ScaledValue::round_down(&x, res);
        checked += 1;
        if fine != coarse {
            return Ok(ExactReport {
                checked,
                counterexample: Some(format!(
                    "x={x} at level {level}: {} via finer grid, {} directly",
                    fine.units(),
                    coarse.units()
                )),
            });
        }
    }
    Ok(ExactReport {
        checked,
        counterexample: None,
    })
}

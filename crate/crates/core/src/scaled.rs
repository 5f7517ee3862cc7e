//! Grid arithmetic: resolutions `gamma_t = 1 / (d * M^t)`, values stored as
//! integer unit counts on those grids, rounding down, and the rounded-gap
//! correction.
//!
//! Rounding is floor rounding (toward negative infinity) everywhere, including
//! for negative inputs.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rational::Rational;

/// `x` rounded down to the nearest multiple of `gamma`: `floor(x / gamma) * gamma`.
pub fn round_down_to(x: &Rational, gamma: &Rational) -> Result<Rational> {
    if !gamma.is_positive() {
        return Err(invalid("resolution must be positive"));
    }
    let steps = (x / gamma).floor();
    Ok(&Rational::from_integer(steps) * gamma)
}

/// A grid level: `gamma_t = gamma_star / M^t` with `gamma_star = 1/d`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Resolution {
    base_denom: u64,
    refine_factor: u64,
    level: u32,
}

impl Resolution {
    /// Level-0 resolution `1/base_denom` refined by `refine_factor` per level.
    pub fn new(base_denom: u64, refine_factor: u64) -> Result<Self> {
        if base_denom == 0 {
            return Err(invalid("target resolution denominator must be positive"));
        }
        if refine_factor < 2 {
            return Err(invalid("refine factor must be at least 2"));
        }
        Ok(Self {
            base_denom,
            refine_factor,
            level: 0,
        })
    }

    /// Builds the level-0 resolution from `gamma_star`, which must be `1/d`.
    pub fn from_gamma(gamma_star: &Rational, refine_factor: u64) -> Result<Self> {
        let d = gamma_star
            .reciprocal_integer()
            .and_then(|d| u64::try_from(d).ok())
            .ok_or_else(|| invalid(format!("target resolution {gamma_star} is not 1/d")))?;
        Self::new(d, refine_factor)
    }

    pub fn at_level(self, level: u32) -> Self {
        Self { level, ..self }
    }

    pub fn refined(self) -> Self {
        self.at_level(self.level + 1)
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn base_denom(&self) -> u64 {
        self.base_denom
    }

    pub fn refine_factor(&self) -> u64 {
        self.refine_factor
    }

    /// `M^level`: the number of level-`t` units in one `gamma_star`.
    pub fn scale(&self) -> BigUint {
        num_traits::pow(BigUint::from(self.refine_factor), self.level as usize)
    }

    /// `d * M^level`: the number of level-`t` units in 1.
    pub fn units_per_one(&self) -> BigUint {
        self.scale() * self.base_denom
    }

    pub fn gamma(&self) -> Rational {
        Rational::new(1, BigInt::from(self.units_per_one())).expect("positive denominator")
    }

    pub fn gamma_star(&self) -> Rational {
        self.at_level(0).gamma()
    }

    fn same_grid(&self, other: &Self) -> bool {
        self.base_denom == other.base_denom && self.refine_factor == other.refine_factor
    }
}

/// A value `units * gamma_t` on the grid of `res`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ScaledValue {
    units: BigInt,
    res: Resolution,
}

impl ScaledValue {
    pub fn new(units: impl Into<BigInt>, res: Resolution) -> Self {
        Self {
            units: units.into(),
            res,
        }
    }

    /// Rounds `x` down onto the grid of `res`.
    pub fn round_down(x: &Rational, res: Resolution) -> Self {
        let per_one = Rational::from_integer(BigInt::from(res.units_per_one()));
        Self::new((x * &per_one).floor(), res)
    }

    pub fn units(&self) -> &BigInt {
        &self.units
    }

    pub fn resolution(&self) -> Resolution {
        self.res
    }

    pub fn level(&self) -> u32 {
        self.res.level
    }

    pub fn value(&self) -> Rational {
        &Rational::from_integer(self.units.clone()) * &self.res.gamma()
    }

    /// Moves one level finer and adds `increment` new units (`increment < M`).
    /// The represented value grows by `increment * gamma_{t+1} < gamma_t`.
    pub fn refine(&self, increment: u64) -> Result<Self> {
        if increment >= self.res.refine_factor {
            return Err(invalid(format!(
                "refinement increment {increment} must be below {}",
                self.res.refine_factor
            )));
        }
        Ok(Self {
            units: &self.units * self.res.refine_factor + increment,
            res: self.res.refined(),
        })
    }

    /// Rounds down to the coarser `level`: `floor(units / M^(t - level))`.
    pub fn coarsen(&self, level: u32) -> Result<Self> {
        if level > self.res.level {
            return Err(invalid(format!(
                "cannot coarsen level {} to finer level {level}",
                self.res.level
            )));
        }
        let factor = BigInt::from(num_traits::pow(
            BigUint::from(self.res.refine_factor),
            (self.res.level - level) as usize,
        ));
        Ok(Self {
            units: self.units.div_floor(&factor),
            res: self.res.at_level(level),
        })
    }

    /// Compares two values on the same grid level; mixed levels are an error.
    pub fn try_cmp(&self, other: &Self) -> Result<Ordering> {
        if !self.res.same_grid(&other.res) || self.res.level != other.res.level {
            return Err(invalid("comparison across different resolutions"));
        }
        Ok(self.units.cmp(&other.units))
    }
}

/// A released gap: a nonnegative multiple of `gamma_star = 1/base_denom`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GapValue {
    units: BigUint,
    base_denom: u64,
}

impl GapValue {
    pub fn new(units: impl Into<BigUint>, base_denom: u64) -> Result<Self> {
        if base_denom == 0 {
            return Err(invalid("target resolution denominator must be positive"));
        }
        Ok(Self {
            units: units.into(),
            base_denom,
        })
    }

    /// Count of `gamma_star` steps.
    pub fn units(&self) -> &BigUint {
        &self.units
    }

    pub fn base_denom(&self) -> u64 {
        self.base_denom
    }

    pub fn value(&self) -> Rational {
        Rational::new(BigInt::from(self.units.clone()), self.base_denom).expect("positive")
    }

    /// Exact text form: a decimal when `base_denom` is a power of ten
    /// (`"12.3"`), otherwise `"units/base_denom"` (`"7/4"`, unreduced).
    pub fn to_exact_string(&self) -> String {
        match decimal_places(self.base_denom) {
            Some(0) => self.units.to_string(),
            Some(places) => {
                let digits = format!("{:0>width$}", self.units, width = places + 1);
                let (int, frac) = digits.split_at(digits.len() - places);
                format!("{int}.{frac}")
            }
            None => format!("{}/{}", self.units, self.base_denom),
        }
    }

    /// Inverse of [`GapValue::to_exact_string`] for a known `base_denom`.
    pub fn parse_exact(s: &str, base_denom: u64) -> Result<Self> {
        let bad = || invalid(format!("not an exact gap for 1/{base_denom}: {s:?}"));
        let value = match s.split_once('/') {
            Some(_) => s.parse::<Rational>()?,
            None => Rational::from_decimal_str(s)?,
        };
        let units = &value * &Rational::from_integer(base_denom);
        if !units.is_integer() || units.numer().is_negative() {
            return Err(bad());
        }
        Self::new(units.numer().to_biguint().ok_or_else(bad)?, base_denom)
    }
}

impl fmt::Display for GapValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_exact_string())
    }
}

fn decimal_places(mut d: u64) -> Option<usize> {
    let mut places = 0;
    while d > 1 {
        if !d.is_multiple_of(10) {
            return None;
        }
        d /= 10;
        places += 1;
    }
    Some(places)
}

/// `floor(a - b - delta * gamma_t)` rounded to `gamma_star`, for `a > b` on the
/// same level-`t` grid.
///
/// `delta` is the rounded-difference correction: `floor(x - y)` on a grid
/// equals `floor(x) - floor(y)` minus one step exactly when the remainder of
/// `x` is below the remainder of `y`.
pub fn rounded_gap(a: &ScaledValue, b: &ScaledValue, delta: bool) -> Result<GapValue> {
    if a.try_cmp(b)? != Ordering::Greater {
        return Err(Error::PreconditionViolation(format!(
            "gap needs a strictly larger first value ({} <= {})",
            a.units, b.units
        )));
    }
    let mut diff = &a.units - &b.units;
    if delta {
        diff -= BigInt::one();
    }
    let scale = BigInt::from(a.res.scale());
    let units = diff.div_floor(&scale);
    debug_assert!(!units.is_negative());
    GapValue::new(
        units.to_biguint().unwrap_or_else(BigUint::zero),
        a.res.base_denom,
    )
}

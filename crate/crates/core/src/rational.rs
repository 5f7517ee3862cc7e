use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{invalid, Error, Result};

/// Arbitrary-precision signed fraction, always in lowest terms with a
/// positive denominator.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rational(BigRational);

impl Rational {
    pub fn new(numer: impl Into<BigInt>, denom: impl Into<BigInt>) -> Result<Self> {
        let denom = denom.into();
        if denom.is_zero() {
            return Err(invalid("zero denominator"));
        }
        Ok(Self(BigRational::new(numer.into(), denom)))
    }

    pub fn from_integer(n: impl Into<BigInt>) -> Self {
        Self(BigRational::from_integer(n.into()))
    }

    pub fn zero() -> Self {
        Self(BigRational::zero())
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    /// Largest integer not above `self`.
    pub fn floor(&self) -> BigInt {
        self.numer().div_floor(self.denom())
    }

    /// For a positive value of the form `1/d`, returns `d`.
    pub fn reciprocal_integer(&self) -> Option<BigUint> {
        if self.numer().is_one() {
            self.denom().to_biguint()
        } else {
            None
        }
    }

    pub fn as_big_rational(&self) -> &BigRational {
        &self.0
    }

    /// Parses an exact decimal such as `2.35` or `-0.05` (no exponent).
    pub fn from_decimal_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (neg, body) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s.strip_prefix('+').unwrap_or(s)),
        };
        let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
        if int_part.is_empty() && frac_part.is_empty()
            || !int_part.chars().all(|c| c.is_ascii_digit())
            || !frac_part.chars().all(|c| c.is_ascii_digit())
        {
            return Err(invalid(format!("not a decimal number: {s:?}")));
        }
        let digits = format!("{int_part}{frac_part}");
        let mut numer: BigInt = if digits.is_empty() {
            BigInt::zero()
        } else {
            digits
                .parse()
                .map_err(|_| invalid(format!("bad digits in {s:?}")))?
        };
        if neg {
            numer = -numer;
        }
        let denom = num_traits::pow(BigInt::from(10u32), frac_part.len());
        Rational::new(numer, denom)
    }
}

impl From<BigRational> for Rational {
    fn from(r: BigRational) -> Self {
        Self(r)
    }
}

impl From<i64> for Rational {
    fn from(n: i64) -> Self {
        Self::from_integer(n)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.numer())
        } else {
            write!(f, "{}/{}", self.numer(), self.denom())
        }
    }
}

/// Parses `"num/den"` or a plain integer. Decimal notation is rejected here
/// on purpose; use [`Rational::from_decimal_str`] where it is wanted.
impl FromStr for Rational {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let parse_int = |part: &str| -> Result<BigInt> {
            let part = part.trim();
            let ok = !part.is_empty()
                && part
                    .strip_prefix('-')
                    .unwrap_or(part)
                    .chars()
                    .all(|c| c.is_ascii_digit());
            if !ok {
                return Err(invalid(format!("not an integer: {part:?}")));
            }
            part.parse()
                .map_err(|_| invalid(format!("not an integer: {part:?}")))
        };
        match s.split_once('/') {
            Some((n, d)) => Rational::new(parse_int(n)?, parse_int(d)?),
            None => Ok(Rational::from_integer(parse_int(s)?)),
        }
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident) => {
        impl $trait<&Rational> for &Rational {
            type Output = Rational;
            fn $method(self, rhs: &Rational) -> Rational {
                Rational((&self.0).$method(&rhs.0))
            }
        }
        impl $trait for Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational(self.0.$method(rhs.0))
            }
        }
    };
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);
forward_binop!(Div, div);

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-self.0)
    }
}

impl Rational {
    pub fn abs(&self) -> Rational {
        Rational(self.0.abs())
    }

    pub fn signum(&self) -> Sign {
        self.numer().sign()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(s: &str) -> Rational {
        s.parse().unwrap()
    }

    #[test]
    fn lowest_terms_positive_denominator() {
        let x = Rational::new(6, -4).unwrap();
        assert_eq!(x.numer(), &BigInt::from(-3));
        assert_eq!(x.denom(), &BigInt::from(2));
        assert!(Rational::new(1, 0).is_err());
    }

    #[test]
    fn parse_fraction_and_integer() {
        assert_eq!(r("1/10"), Rational::new(1, 10).unwrap());
        assert_eq!(r("4/2"), Rational::from_integer(2));
        assert_eq!(r("-7"), Rational::from_integer(-7));
        assert!("1.5".parse::<Rational>().is_err());
        assert!("1/".parse::<Rational>().is_err());
        assert!("a/b".parse::<Rational>().is_err());
        assert!("1/0".parse::<Rational>().is_err());
    }

    #[test]
    fn parse_decimal_is_exact() {
        assert_eq!(Rational::from_decimal_str("2.35").unwrap(), r("47/20"));
        assert_eq!(Rational::from_decimal_str("-0.05").unwrap(), r("-1/20"));
        assert_eq!(Rational::from_decimal_str("3").unwrap(), r("3"));
        assert_eq!(Rational::from_decimal_str(".5").unwrap(), r("1/2"));
        assert!(Rational::from_decimal_str("1e3").is_err());
        assert!(Rational::from_decimal_str(".").is_err());
    }

    #[test]
    fn floor_rounds_toward_negative_infinity() {
        assert_eq!(r("7/2").floor(), BigInt::from(3));
        assert_eq!(r("-7/2").floor(), BigInt::from(-4));
        assert_eq!(r("-4").floor(), BigInt::from(-4));
    }

    #[test]
    fn display_round_trips() {
        for s in ["3/7", "-1/20", "12", "0"] {
            assert_eq!(r(s).to_string(), s);
        }
    }

    #[test]
    fn reciprocal_integer_detection() {
        assert_eq!(r("1/10").reciprocal_integer(), Some(BigUint::from(10u32)));
        assert_eq!(r("1").reciprocal_integer(), Some(BigUint::from(1u32)));
        assert_eq!(r("3/10").reciprocal_integer(), None);
        assert_eq!(r("-1/10").reciprocal_integer(), None);
    }
}

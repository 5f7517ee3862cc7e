//! Exact discrete samplers driven only by random bits.
//!
//! Nothing in this module touches floating point. Probabilities are given as
//! integer fractions, and `exp(-s/t)` is never evaluated: Bernoulli(exp(-s/t))
//! is realised with the alternating-series construction of Canonne, Kamath
//! and Steinke, and geometric draws reduce to it.
//!
//! Each sampler keeps a [`SamplerStats`] tally. Counting rule: every call of
//! [`Sampler::uniform_below`] (internal or external) is one uniform call no
//! matter how many rejections it needs, every rational Bernoulli trial is one
//! Bernoulli call, and every geometric draw is one geometric call.

use std::ops::AddAssign;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::bits::RandomBits;
use crate::error::{invalid, Result};

/// Invocation counts for the sampling primitives.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplerStats {
    pub geometric_calls: u64,
    pub bernoulli_calls: u64,
    pub uniform_calls: u64,
}

impl SamplerStats {
    pub fn reset(&mut self) {
        *self = Self::default();
    }
}

impl AddAssign for SamplerStats {
    fn add_assign(&mut self, rhs: Self) {
        self.geometric_calls += rhs.geometric_calls;
        self.bernoulli_calls += rhs.bernoulli_calls;
        self.uniform_calls += rhs.uniform_calls;
    }
}

/// A nonnegative rational rate `s/t`, kept in lowest terms.
///
/// Used both as the exponent in Bernoulli(exp(-s/t)) and as the parameter of
/// Geom(1 - exp(-s/t)).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExpRate {
    s: BigUint,
    t: BigUint,
    small: Option<(u128, u128)>,
}

impl ExpRate {
    /// Builds `s/t`. `t = 0` is rejected; `s = 0` is a valid (zero) rate.
    pub fn new(s: impl Into<BigUint>, t: impl Into<BigUint>) -> Result<Self> {
        let (s, t) = (s.into(), t.into());
        if t.is_zero() {
            return Err(invalid("rate denominator must be positive"));
        }
        let g = s.gcd(&t);
        let (s, t) = if g.is_zero() {
            (s, t)
        } else {
            (s / &g, t / &g)
        };
        let small = match (s.to_u64(), t.to_u64()) {
            (Some(a), Some(b)) => Some((u128::from(a), u128::from(b))),
            _ => None,
        };
        Ok(Self { s, t, small })
    }

    pub fn numer(&self) -> &BigUint {
        &self.s
    }

    pub fn denom(&self) -> &BigUint {
        &self.t
    }

    pub fn is_zero(&self) -> bool {
        self.s.is_zero()
    }
}

/// Unsigned integers the samplers can work over: a `u128` fast path for
/// parameters that fit in 64 bits and `BigUint` for everything else.
trait Natural: Clone + Ord {
    fn from_u64(v: u64) -> Self;
    fn is_unit(&self) -> bool;
    fn plus(&self, other: &Self) -> Self;
    fn times(&self, other: &Self) -> Self;
    fn times_u64(&self, k: u64) -> Self;
    fn div_rem(&self, other: &Self) -> (Self, Self);
    /// Number of bits needed to write `self - 1`; `self >= 1`.
    fn bits_below(&self) -> u64;
    fn random<R: RandomBits + ?Sized>(src: &mut R, nbits: u64) -> Self;
}

impl Natural for u128 {
    fn from_u64(v: u64) -> Self {
        u128::from(v)
    }
    fn is_unit(&self) -> bool {
        *self == 1
    }
    fn plus(&self, other: &Self) -> Self {
        self.checked_add(*other).expect("u128 sampler overflow")
    }
    fn times(&self, other: &Self) -> Self {
        self.checked_mul(*other).expect("u128 sampler overflow")
    }
    fn times_u64(&self, k: u64) -> Self {
        self.checked_mul(u128::from(k))
            .expect("u128 sampler overflow")
    }
    fn div_rem(&self, other: &Self) -> (Self, Self) {
        (self / other, self % other)
    }
    fn bits_below(&self) -> u64 {
        u64::from(128 - (self - 1).leading_zeros())
    }
    fn random<R: RandomBits + ?Sized>(src: &mut R, nbits: u64) -> Self {
        debug_assert!(nbits <= 128);
        if nbits <= 64 {
            u128::from(src.next_bits(nbits as u32))
        } else {
            let lo = u128::from(src.next_bits(64));
            let hi = u128::from(src.next_bits((nbits - 64) as u32));
            lo | (hi << 64)
        }
    }
}

impl Natural for BigUint {
    fn from_u64(v: u64) -> Self {
        BigUint::from(v)
    }
    fn is_unit(&self) -> bool {
        One::is_one(self)
    }
    fn plus(&self, other: &Self) -> Self {
        self + other
    }
    fn times(&self, other: &Self) -> Self {
        self * other
    }
    fn times_u64(&self, k: u64) -> Self {
        self * k
    }
    fn div_rem(&self, other: &Self) -> (Self, Self) {
        Integer::div_rem(self, other)
    }
    fn bits_below(&self) -> u64 {
        (self - 1u32).bits()
    }
    fn random<R: RandomBits + ?Sized>(src: &mut R, nbits: u64) -> Self {
        let mut digits = Vec::with_capacity(nbits.div_ceil(32) as usize);
        let mut left = nbits;
        while left > 0 {
            let take = left.min(32);
            digits.push(src.next_bits(take as u32) as u32);
            left -= take;
        }
        BigUint::new(digits)
    }
}

/// Exact samplers over one bit source, with invocation accounting.
pub struct Sampler<R> {
    src: R,
    stats: SamplerStats,
}

impl<R: RandomBits> Sampler<R> {
    pub fn new(src: R) -> Self {
        Self {
            src,
            stats: SamplerStats::default(),
        }
    }

    pub fn stats(&self) -> SamplerStats {
        self.stats
    }

    pub fn reset_stats(&mut self) {
        self.stats.reset();
    }

    pub fn source(&self) -> &R {
        &self.src
    }

    pub fn into_parts(self) -> (R, SamplerStats) {
        (self.src, self.stats)
    }

    /// Uniform integer in `[0, bound)` by bit-level rejection: draw
    /// `ceil(log2 bound)` bits and retry while the value is `>= bound`.
    ///
    /// Expected termination only; each attempt succeeds with probability
    /// above one half.
    pub fn uniform_below(&mut self, bound: u64) -> Result<u64> {
        if bound == 0 {
            return Err(invalid("uniform_below needs a positive bound"));
        }
        Ok(self.uniform_n(&u128::from(bound)) as u64)
    }

    pub fn uniform_below_big(&mut self, bound: &BigUint) -> Result<BigUint> {
        if bound.is_zero() {
            return Err(invalid("uniform_below needs a positive bound"));
        }
        Ok(self.uniform_n(bound))
    }

    /// Bernoulli(num/den).
    pub fn bernoulli_rational(&mut self, num: u64, den: u64) -> Result<bool> {
        if den == 0 {
            return Err(invalid("bernoulli denominator must be positive"));
        }
        if num > den {
            return Err(invalid(format!("probability {num}/{den} exceeds one")));
        }
        Ok(self.bernoulli_n(&u128::from(num), &u128::from(den)))
    }

    /// Bernoulli(exp(-s/t)). `s = 0` always yields `true`.
    pub fn bernoulli_exp_neg(&mut self, s: u64, t: u64) -> Result<bool> {
        Ok(self.bernoulli_exp_neg_rate(&ExpRate::new(s, t)?))
    }

    pub fn bernoulli_exp_neg_rate(&mut self, rate: &ExpRate) -> bool {
        match rate.small {
            Some((s, t)) => self.bern_exp_n(&s, &t),
            None => self.bern_exp_n(&rate.s, &rate.t),
        }
    }

    /// Geom(1 - exp(-s/t)) on `{0, 1, 2, ...}`.
    pub fn geometric(&mut self, s: u64, t: u64) -> Result<BigUint> {
        self.geometric_rate(&ExpRate::new(s, t)?)
    }

    pub fn geometric_rate(&mut self, rate: &ExpRate) -> Result<BigUint> {
        if rate.is_zero() {
            return Err(invalid("geometric sampling needs a positive rate"));
        }
        Ok(match rate.small {
            Some((s, t)) => BigUint::from(self.geometric_n(&s, &t)),
            None => self.geometric_n(&rate.s, &rate.t),
        })
    }

    /// `geometric_rate(rate) mod m`, without materialising a big integer on
    /// the fast path.
    pub fn geometric_mod(&mut self, rate: &ExpRate, m: u64) -> Result<u64> {
        if rate.is_zero() {
            return Err(invalid("geometric sampling needs a positive rate"));
        }
        if m == 0 {
            return Err(invalid("modulus must be positive"));
        }
        Ok(match rate.small {
            Some((s, t)) => (self.geometric_n(&s, &t) % u128::from(m)) as u64,
            None => (self.geometric_n(&rate.s, &rate.t) % m)
                .to_u64()
                .expect("residue below a u64 modulus"),
        })
    }

    /// In-place Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.uniform_n(&((i as u128) + 1)) as usize;
            items.swap(i, j);
        }
    }

    fn uniform_n<N: Natural>(&mut self, bound: &N) -> N {
        self.stats.uniform_calls += 1;
        let nbits = bound.bits_below();
        loop {
            let x = N::random(&mut self.src, nbits);
            if x < *bound {
                return x;
            }
        }
    }

    fn bernoulli_n<N: Natural>(&mut self, num: &N, den: &N) -> bool {
        self.stats.bernoulli_calls += 1;
        self.uniform_n(den) < *num
    }

    fn bern_exp_n<N: Natural>(&mut self, s: &N, t: &N) -> bool {
        if s <= t {
            return self.bern_exp_at_most_one(s, t);
        }
        // exp(-s/t) = exp(-1)^floor(s/t) * exp(-(s mod t)/t)
        let (whole, rem) = s.div_rem(t);
        let one = N::from_u64(1);
        let mut done = N::from_u64(0);
        while done < whole {
            if !self.bern_exp_at_most_one(&one, &one) {
                return false;
            }
            done = done.plus(&one);
        }
        self.bern_exp_at_most_one(&rem, t)
    }

    /// Alternating series for `0 <= s/t <= 1`: draw Bernoulli(s/(t k)) for
    /// k = 1, 2, ... until the first failure at index K; succeed iff K is odd.
    fn bern_exp_at_most_one<N: Natural>(&mut self, s: &N, t: &N) -> bool {
        let mut k: u64 = 1;
        while self.bernoulli_n(s, &t.times_u64(k)) {
            k += 1;
        }
        k % 2 == 1
    }

    fn geometric_n<N: Natural>(&mut self, s: &N, t: &N) -> N {
        self.stats.geometric_calls += 1;
        // U ~ Uniform{0..t-1} accepted with probability exp(-U/t)
        let u = loop {
            let u = self.uniform_n(t);
            if self.bern_exp_at_most_one(&u, t) {
                break u;
            }
        };
        // V ~ Geom(1 - exp(-1))
        let one = N::from_u64(1);
        let mut v = N::from_u64(0);
        while self.bern_exp_at_most_one(&one, &one) {
            v = v.plus(&one);
        }
        // X = U + t V ~ Geom(1 - exp(-1/t)); floor(X / s) ~ Geom(1 - exp(-s/t))
        let x = u.plus(&t.times(&v));
        if s.is_unit() {
            x
        } else {
            x.div_rem(s).0
        }
    }
}

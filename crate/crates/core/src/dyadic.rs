//! Exact dyadic rationals `n / 2^e`.
//!
//! Every measure value in the crate lives here. Numerators are arbitrary
//! precision, so sums over `2^u` preimage cylinders never round.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DyadicParseError {
    #[error("empty dyadic literal")]
    Empty,
    #[error("malformed dyadic literal `{0}`")]
    Malformed(String),
    #[error("denominator of `{0}` is not a power of two")]
    NotDyadic(String),
}

/// An exact value `numerator / 2^exponent` kept in canonical form:
/// either the exponent is zero or the numerator is odd, and zero is `0/2^0`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct DyadicRational {
    numerator: BigInt,
    exponent: u32,
}

impl DyadicRational {
    pub fn new(numerator: impl Into<BigInt>, exponent: u32) -> Self {
        let mut value = Self {
            numerator: numerator.into(),
            exponent,
        };
        value.canonicalize();
        value
    }

    pub fn zero() -> Self {
        Self::new(0, 0)
    }

    pub fn one() -> Self {
        Self::new(1, 0)
    }

    pub fn from_int(n: impl Into<BigInt>) -> Self {
        Self::new(n, 0)
    }

    /// `2^-i`.
    pub fn pow2_neg(i: u32) -> Self {
        Self::new(1, i)
    }

    /// Largest dyadic with exponent at most `precision` that does not exceed `p/q`.
    /// The result is within `2^-precision` of `p/q` (strictly below when inexact).
    pub fn floor_ratio(p: &BigInt, q: &BigInt, precision: u32) -> Self {
        assert!(q.is_positive(), "denominator must be positive");
        let scaled: BigInt = p << precision as usize;
        Self::new(scaled.div_floor(q), precision)
    }

    fn canonicalize(&mut self) {
        if self.numerator.is_zero() {
            self.exponent = 0;
            return;
        }
        let twos = self.numerator.trailing_zeros().unwrap_or(0);
        let shift = twos.min(self.exponent as u64) as u32;
        if shift > 0 {
            self.numerator >>= shift as usize;
            self.exponent -= shift;
        }
    }

    pub fn numerator(&self) -> &BigInt {
        &self.numerator
    }

    pub fn exponent(&self) -> u32 {
        self.exponent
    }

    pub fn is_zero(&self) -> bool {
        self.numerator.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.numerator.is_negative()
    }

    pub fn abs(&self) -> Self {
        Self {
            numerator: self.numerator.abs(),
            exponent: self.exponent,
        }
    }

    /// Divide by two, exactly.
    pub fn halve(&self) -> Self {
        self.shr(1)
    }

    /// Multiply by `2^-k`.
    pub fn shr(&self, k: u32) -> Self {
        Self::new(self.numerator.clone(), self.exponent + k)
    }

    /// Multiply by `2^k`.
    pub fn shl(&self, k: u32) -> Self {
        if k <= self.exponent {
            Self::new(self.numerator.clone(), self.exponent - k)
        } else {
            Self::new(&self.numerator << (k - self.exponent) as usize, 0)
        }
    }

    /// Numerators of `self` and `other` over the common denominator `2^max(e)`.
    fn aligned(&self, other: &Self) -> (BigInt, BigInt, u32) {
        let e = self.exponent.max(other.exponent);
        let a = &self.numerator << (e - self.exponent) as usize;
        let b = &other.numerator << (e - other.exponent) as usize;
        (a, b, e)
    }

    pub fn add(&self, other: &Self) -> Self {
        let (a, b, e) = self.aligned(other);
        Self::new(a + b, e)
    }

    pub fn sub(&self, other: &Self) -> Self {
        let (a, b, e) = self.aligned(other);
        Self::new(a - b, e)
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self::new(
            &self.numerator * &other.numerator,
            self.exponent + other.exponent,
        )
    }

    pub fn compare(&self, other: &Self) -> Ordering {
        let (a, b, _) = self.aligned(other);
        a.cmp(&b)
    }

    pub fn max_of(self, other: Self) -> Self {
        if self >= other {
            self
        } else {
            other
        }
    }

    /// Exact decimal expansion; always finite because `2^-e = 5^e / 10^e`.
    pub fn to_decimal(&self) -> String {
        if self.exponent == 0 {
            return self.numerator.to_string();
        }
        let e = self.exponent as usize;
        let scaled = self.numerator.abs() * num_traits::pow(BigInt::from(5u8), e);
        let digits = scaled.to_string();
        let (int_part, frac_part) = if digits.len() > e {
            digits.split_at(digits.len() - e)
        } else {
            ("", digits.as_str())
        };
        let int_part = if int_part.is_empty() { "0" } else { int_part };
        let pad = "0".repeat(e.saturating_sub(frac_part.len()));
        let frac = format!("{pad}{frac_part}");
        let frac = frac.trim_end_matches('0');
        let sign = if self.is_negative() { "-" } else { "" };
        if frac.is_empty() {
            format!("{sign}{int_part}")
        } else {
            format!("{sign}{int_part}.{frac}")
        }
    }

    /// Lossy conversion for diagnostics only.
    pub fn to_f64_lossy(&self) -> f64 {
        let n = self.numerator.to_f64().unwrap_or(f64::NAN);
        n / 2f64.powi(self.exponent as i32)
    }
}

impl Default for DyadicRational {
    fn default() -> Self {
        Self::zero()
    }
}

impl Ord for DyadicRational {
    fn cmp(&self, other: &Self) -> Ordering {
        self.compare(other)
    }
}

impl PartialOrd for DyadicRational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident) => {
        impl $trait<&DyadicRational> for &DyadicRational {
            type Output = DyadicRational;
            fn $method(self, rhs: &DyadicRational) -> DyadicRational {
                DyadicRational::$method(self, rhs)
            }
        }
        impl $trait for DyadicRational {
            type Output = DyadicRational;
            fn $method(self, rhs: DyadicRational) -> DyadicRational {
                DyadicRational::$method(&self, &rhs)
            }
        }
    };
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);

impl Neg for DyadicRational {
    type Output = DyadicRational;
    fn neg(self) -> DyadicRational {
        Self {
            numerator: -self.numerator,
            exponent: self.exponent,
        }
    }
}

impl std::iter::Sum for DyadicRational {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::zero(), |acc, x| &acc + &x)
    }
}

impl<'a> std::iter::Sum<&'a DyadicRational> for DyadicRational {
    fn sum<I: Iterator<Item = &'a DyadicRational>>(iter: I) -> Self {
        iter.fold(Self::zero(), |acc, x| &acc + x)
    }
}

impl From<i64> for DyadicRational {
    fn from(n: i64) -> Self {
        Self::from_int(n)
    }
}

/// Renders `n/d` with `d = 2^e` written out, or `n/2^e` once `d` would
/// exceed 64 bits.
impl fmt::Display for DyadicRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.exponent {
            0 => write!(f, "{}", self.numerator),
            e if e < 64 => write!(f, "{}/{}", self.numerator, 1u64 << e),
            e => write!(f, "{}/2^{}", self.numerator, e),
        }
    }
}

impl fmt::Debug for DyadicRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Dyadic({self})")
    }
}

fn power_of_two_exponent(d: &BigInt) -> Option<u32> {
    if !d.is_positive() {
        return None;
    }
    let tz = d.trailing_zeros().unwrap_or(0);
    if d >> tz as usize == BigInt::one() {
        u32::try_from(tz).ok()
    } else {
        None
    }
}

/// Accepts `n`, `n/d` with `d` a power of two, `n/2^e`, and finite decimals
/// such as `0.375` whose value is dyadic.
impl FromStr for DyadicRational {
    type Err = DyadicParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() {
            return Err(DyadicParseError::Empty);
        }
        let malformed = || DyadicParseError::Malformed(s.to_string());
        if let Some((num, den)) = s.split_once('/') {
            let numerator: BigInt = num.trim().parse().map_err(|_| malformed())?;
            let den = den.trim();
            if let Some(exp) = den.strip_prefix("2^") {
                let e: u32 = exp.parse().map_err(|_| malformed())?;
                return Ok(Self::new(numerator, e));
            }
            let d: BigInt = den.parse().map_err(|_| malformed())?;
            let e = power_of_two_exponent(&d)
                .ok_or_else(|| DyadicParseError::NotDyadic(s.to_string()))?;
            return Ok(Self::new(numerator, e));
        }
        if let Some((int_part, frac_part)) = s.split_once('.') {
            if frac_part.is_empty() || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
                return Err(malformed());
            }
            let negative = int_part.starts_with('-');
            let digits = format!("{}{}", int_part.trim_start_matches(['-', '+']), frac_part);
            let mut n: BigInt = digits.parse().map_err(|_| malformed())?;
            if negative {
                n = -n;
            }
            let k = frac_part.len();
            // n / 10^k = n / (2^k 5^k); dyadic iff 5^k divides n.
            let five_k = num_traits::pow(BigInt::from(5u8), k);
            let (q, r) = n.div_rem(&five_k);
            if !r.is_zero() {
                return Err(DyadicParseError::NotDyadic(s.to_string()));
            }
            return Ok(Self::new(q, k as u32));
        }
        let n: BigInt = s.parse().map_err(|_| malformed())?;
        Ok(Self::from_int(n))
    }
}

/// Sign helper used by callers that clamp approximations.
pub fn is_nonnegative(x: &DyadicRational) -> bool {
    x.numerator.sign() != Sign::Minus
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn d(s: &str) -> DyadicRational {
        s.parse().unwrap()
    }

    fn is_canonical(x: &DyadicRational) -> bool {
        if x.numerator.is_zero() {
            return x.exponent == 0;
        }
        x.exponent == 0 || x.numerator.is_odd()
    }

    #[test]
    fn half_plus_quarter() {
        assert_eq!(d("1/2") + d("1/4"), d("3/4"));
        assert_eq!((d("1/2") + d("1/4")).to_string(), "3/4");
    }

    #[test]
    fn zero_product_is_canonical() {
        let z = d("3/4") * DyadicRational::zero();
        assert!(z.is_zero());
        assert_eq!(z.exponent(), 0);
        assert_eq!(z.numerator(), &BigInt::zero());
    }

    #[test]
    fn repeated_halving() {
        let mut x = DyadicRational::one();
        for i in 1..=70u32 {
            x = x.halve();
            assert_eq!(x.numerator(), &BigInt::one());
            assert_eq!(x.exponent(), i);
            assert_eq!(x, DyadicRational::pow2_neg(i));
        }
    }

    #[test]
    fn parse_forms() {
        assert_eq!(d("3/8"), DyadicRational::new(3, 3));
        assert_eq!(d("6/16"), DyadicRational::new(3, 3));
        assert_eq!(d("3/2^3"), DyadicRational::new(3, 3));
        assert_eq!(d("0.375"), DyadicRational::new(3, 3));
        assert_eq!(d("-1.5"), DyadicRational::new(-3, 1));
        assert_eq!(d("7"), DyadicRational::from_int(7));
        assert!(matches!(
            "1/3".parse::<DyadicRational>(),
            Err(DyadicParseError::NotDyadic(_))
        ));
        assert!(matches!(
            "0.1".parse::<DyadicRational>(),
            Err(DyadicParseError::NotDyadic(_))
        ));
        assert!("x/2".parse::<DyadicRational>().is_err());
    }

    #[test]
    fn render() {
        assert_eq!(d("1/8").to_string(), "1/8");
        assert_eq!(d("1/8").to_decimal(), "0.125");
        assert_eq!(d("-3/4").to_decimal(), "-0.75");
        assert_eq!(d("5").to_decimal(), "5");
        assert_eq!(DyadicRational::pow2_neg(70).to_string(), "1/2^70");
    }

    #[test]
    fn floor_ratio_third() {
        let third = DyadicRational::floor_ratio(&BigInt::from(1), &BigInt::from(3), 10);
        assert_eq!(third, DyadicRational::new(341, 10));
        let minus = DyadicRational::floor_ratio(&BigInt::from(-1), &BigInt::from(3), 2);
        assert_eq!(minus, d("-1/2"));
    }

    fn arb_dyadic() -> impl Strategy<Value = DyadicRational> {
        (any::<i64>(), 0u32..80).prop_map(|(n, e)| DyadicRational::new(n, e))
    }

    proptest! {
        #[test]
        fn add_then_sub_round_trips(a in arb_dyadic(), b in arb_dyadic()) {
            prop_assert_eq!(&(&a + &b) - &b, a);
        }

        #[test]
        fn operations_stay_canonical(a in arb_dyadic(), b in arb_dyadic(), k in 0u32..20) {
            for x in [&a + &b, &a - &b, &a * &b, a.halve(), a.shl(k), a.shr(k), a.abs()] {
                prop_assert!(is_canonical(&x), "{:?}", x);
            }
        }

        #[test]
        fn parse_display_round_trip(a in arb_dyadic()) {
            prop_assert_eq!(a.to_string().parse::<DyadicRational>().unwrap(), a.clone());
            prop_assert_eq!(a.to_decimal().parse::<DyadicRational>().unwrap(), a);
        }
    }

    /// Comparison oracle: cross-multiplied integers on raw (unnormalized) pairs.
    #[test]
    fn compare_matches_cross_multiplication() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10_000 {
            let (n1, e1): (i64, u32) = (rng.gen_range(-1000..1000), rng.gen_range(0..12));
            let (n2, e2): (i64, u32) = (rng.gen_range(-1000..1000), rng.gen_range(0..12));
            let lhs = BigInt::from(n1) * (BigInt::one() << e2 as usize);
            let rhs = BigInt::from(n2) * (BigInt::one() << e1 as usize);
            let a = DyadicRational::new(n1, e1);
            let b = DyadicRational::new(n2, e2);
            assert_eq!(a.cmp(&b), lhs.cmp(&rhs), "{a} vs {b}");
        }
    }
}

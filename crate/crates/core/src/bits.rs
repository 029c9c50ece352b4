//! Finite binary strings and eventually periodic infinite sequences.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BitsParseError {
    #[error("invalid bit `{0}` (expected 0 or 1)")]
    InvalidBit(char),
    #[error("pattern `{0}` needs a nonempty repeating tail after `+`")]
    EmptyPeriod(String),
    #[error("`{0}` is not an eventually periodic pattern (expected <prefix>+<tail>)")]
    NotPattern(String),
}

/// A finite string over `{0,1}`; `⟦σ⟧` is the cylinder of its extensions.
///
/// The derived order is lexicographic with prefixes first.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString(Vec<bool>);

impl BitString {
    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self(bits)
    }

    pub fn repeat(bit: bool, n: usize) -> Self {
        Self(vec![bit; n])
    }

    /// Binary expansion of `value` in exactly `len` bits, most significant first.
    pub fn from_index(value: u64, len: usize) -> Self {
        Self((0..len).map(|i| (value >> (len - 1 - i)) & 1 == 1).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn get(&self, i: usize) -> Option<bool> {
        self.0.get(i).copied()
    }

    pub fn push(&mut self, bit: bool) {
        self.0.push(bit);
    }

    pub fn extend_from(&mut self, other: &BitString) {
        self.0.extend_from_slice(&other.0);
    }

    pub fn child(&self, bit: bool) -> Self {
        let mut c = self.clone();
        c.push(bit);
        c
    }

    pub fn concat(&self, other: &BitString) -> Self {
        let mut c = self.clone();
        c.extend_from(other);
        c
    }

    pub fn truncate(&self, n: usize) -> Self {
        Self(self.0[..n.min(self.0.len())].to_vec())
    }

    /// `self ⪯ other`.
    pub fn is_prefix_of(&self, other: &BitString) -> bool {
        other.0.starts_with(&self.0)
    }

    /// Whether one of the two is a prefix of the other.
    pub fn compatible(&self, other: &BitString) -> bool {
        self.is_prefix_of(other) || other.is_prefix_of(self)
    }

    /// All strings of length `n` in lexicographic order.
    pub fn all_of_length(n: usize) -> impl Iterator<Item = BitString> {
        assert!(n < 64, "refusing to enumerate 2^{n} strings");
        (0..(1u64 << n)).map(move |v| BitString::from_index(v, n))
    }

    /// All strings of length `< n`, shortest first.
    pub fn all_shorter_than(n: usize) -> impl Iterator<Item = BitString> {
        (0..n).flat_map(BitString::all_of_length)
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("ε");
        }
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "\"{self}\"")
    }
}

/// Parses `0`/`1` strings; the empty string may be written `ε` or left empty.
impl FromStr for BitString {
    type Err = BitsParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "ε" {
            return Ok(Self::empty());
        }
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(BitsParseError::InvalidBit(other)),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Self)
    }
}

impl From<&[bool]> for BitString {
    fn from(bits: &[bool]) -> Self {
        Self(bits.to_vec())
    }
}

/// An infinite sequence `prefix · period^ω`, stored canonically (primitive
/// period, shortest prefix), so structural equality is sequence equality.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EventuallyPeriodic {
    prefix: BitString,
    period: BitString,
}

impl EventuallyPeriodic {
    pub fn new(prefix: BitString, period: BitString) -> Self {
        assert!(!period.is_empty(), "period must be nonempty");
        let mut p = Self { prefix, period };
        p.canonicalize();
        p
    }

    pub fn constant(bit: bool) -> Self {
        Self::new(BitString::empty(), BitString::repeat(bit, 1))
    }

    /// `σ·b^ω`.
    pub fn with_tail(prefix: &BitString, bit: bool) -> Self {
        Self::new(prefix.clone(), BitString::repeat(bit, 1))
    }

    fn canonicalize(&mut self) {
        // primitive root of the period
        let bits = self.period.bits().to_vec();
        let n = bits.len();
        for d in 1..=n {
            if n.is_multiple_of(d) && (d..n).all(|i| bits[i] == bits[i - d]) {
                self.period = BitString::from_bits(bits[..d].to_vec());
                break;
            }
        }
        // absorb trailing prefix bits into the period by rotation
        while let (Some(&last_prefix), Some(&last_period)) =
            (self.prefix.bits().last(), self.period.bits().last())
        {
            if last_prefix != last_period {
                break;
            }
            self.prefix.0.pop();
            let mut rotated = vec![last_period];
            rotated.extend_from_slice(&self.period.bits()[..self.period.len() - 1]);
            self.period = BitString::from_bits(rotated);
        }
    }

    pub fn prefix(&self) -> &BitString {
        &self.prefix
    }

    pub fn period(&self) -> &BitString {
        &self.period
    }

    pub fn bit(&self, i: usize) -> bool {
        if i < self.prefix.len() {
            self.prefix.0[i]
        } else {
            let j = (i - self.prefix.len()) % self.period.len();
            self.period.0[j]
        }
    }

    pub fn take(&self, n: usize) -> BitString {
        BitString((0..n).map(|i| self.bit(i)).collect())
    }

    /// The sequence with the listed positions complemented.
    pub fn flip(&self, positions: &[usize]) -> Self {
        let reach = positions.iter().map(|&p| p + 1).max().unwrap_or(0);
        let unrolled = reach.max(self.prefix.len());
        let mut prefix = self.take(unrolled);
        for &p in positions {
            prefix.0[p] = !prefix.0[p];
        }
        // keep the period phase aligned with the unrolled prefix
        let shift = (unrolled - self.prefix.len()) % self.period.len();
        let mut period = self.period.0[shift..].to_vec();
        period.extend_from_slice(&self.period.0[..shift]);
        Self::new(prefix, BitString(period))
    }

    /// Position of the first disagreement, or `None` when the sequences are equal.
    pub fn first_difference(&self, other: &Self) -> Option<usize> {
        let horizon = self.prefix.len().max(other.prefix.len())
            + num_integer::lcm(self.period.len(), other.period.len());
        (0..horizon).find(|&i| self.bit(i) != other.bit(i))
    }

    /// Interleave `parts` bitwise: position `j` reads part `j mod m` at `j div m`.
    pub fn interleave(parts: &[&EventuallyPeriodic]) -> Self {
        assert!(!parts.is_empty());
        let m = parts.len();
        let pre = parts.iter().map(|p| p.prefix.len()).max().unwrap_or(0);
        let per = parts
            .iter()
            .fold(1, |acc, p| num_integer::lcm(acc, p.period.len()));
        let joined = |j: usize| parts[j % m].bit(j / m);
        let prefix = BitString((0..m * pre).map(joined).collect());
        let period = BitString((m * pre..m * (pre + per)).map(joined).collect());
        Self::new(prefix, period)
    }
}

impl fmt::Display for EventuallyPeriodic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.prefix.is_empty() {
            write!(f, "{}", self.prefix)?;
        }
        write!(f, "+{}", self.period)
    }
}

impl fmt::Debug for EventuallyPeriodic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Parses `<prefix>+<tail>`, e.g. `+0` for `0^ω` or `101+10`.
impl FromStr for EventuallyPeriodic {
    type Err = BitsParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (pre, per) = s
            .split_once('+')
            .ok_or_else(|| BitsParseError::NotPattern(s.to_string()))?;
        let prefix: BitString = if pre.is_empty() {
            BitString::empty()
        } else {
            pre.parse()?
        };
        let period: BitString = per.parse()?;
        if period.is_empty() {
            return Err(BitsParseError::EmptyPeriod(s.to_string()));
        }
        Ok(Self::new(prefix, period))
    }
}

/// Something an input prefix can be read from: a finite string or an
/// infinite pattern.
pub trait BitSource {
    /// The first `n` bits, or `None` if the source is shorter.
    fn read(&self, n: usize) -> Option<BitString>;
    /// Length when finite.
    fn finite_len(&self) -> Option<usize>;
}

impl BitSource for BitString {
    fn read(&self, n: usize) -> Option<BitString> {
        (n <= self.len()).then(|| self.truncate(n))
    }

    fn finite_len(&self) -> Option<usize> {
        Some(self.len())
    }
}

impl BitSource for EventuallyPeriodic {
    fn read(&self, n: usize) -> Option<BitString> {
        Some(self.take(n))
    }

    fn finite_len(&self) -> Option<usize> {
        None
    }
}

/// A command-line input: either a finite string or `<prefix>+<tail>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sequence {
    Finite(BitString),
    Periodic(EventuallyPeriodic),
}

impl BitSource for Sequence {
    fn read(&self, n: usize) -> Option<BitString> {
        match self {
            Sequence::Finite(s) => s.read(n),
            Sequence::Periodic(p) => p.read(n),
        }
    }

    fn finite_len(&self) -> Option<usize> {
        match self {
            Sequence::Finite(s) => s.finite_len(),
            Sequence::Periodic(_) => None,
        }
    }
}

impl FromStr for Sequence {
    type Err = BitsParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.contains('+') {
            s.parse().map(Sequence::Periodic)
        } else {
            s.parse().map(Sequence::Finite)
        }
    }
}

impl fmt::Display for Sequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sequence::Finite(s) => write!(f, "{s}"),
            Sequence::Periodic(p) => write!(f, "{p}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    fn ep(s: &str) -> EventuallyPeriodic {
        s.parse().unwrap()
    }

    #[test]
    fn canonical_forms() {
        assert_eq!(ep("000+00"), ep("+0"));
        assert_eq!(ep("1+01").to_string(), "+10");
        assert_eq!(ep("0+1010").to_string(), "+01");
        assert_eq!(ep("10+010").to_string(), "+100");
        assert_eq!(ep("+0").take(3), bs("000"));
        assert_eq!(ep("101+10").take(7), bs("1011010"));
    }

    #[test]
    fn flips() {
        assert_eq!(ep("+0").flip(&[0]), ep("1+0"));
        assert_eq!(ep("+01").flip(&[3]), ep("0100+01"));
        assert_eq!(ep("1+0").flip(&[0]), ep("+0"));
    }

    #[test]
    fn prefix_order() {
        assert!(bs("01").is_prefix_of(&bs("010")));
        assert!(!bs("011").is_prefix_of(&bs("010")));
        assert!(BitString::empty().is_prefix_of(&bs("1")));
        assert!(bs("01") < bs("010"));
        assert!(bs("010") < bs("1"));
    }

    #[test]
    fn interleave_two() {
        let x = ep("+0");
        let y = ep("+1");
        assert_eq!(EventuallyPeriodic::interleave(&[&x, &y]), ep("+01"));
        let a = ep("1+0");
        assert_eq!(EventuallyPeriodic::interleave(&[&a, &y]), ep("11+01"));
    }

    #[test]
    fn parse_errors() {
        assert!(matches!("01".parse::<EventuallyPeriodic>(), Err(BitsParseError::NotPattern(_))));
        assert!(matches!("01+".parse::<EventuallyPeriodic>(), Err(BitsParseError::EmptyPeriod(_))));
        assert!(matches!("0x".parse::<BitString>(), Err(BitsParseError::InvalidBit('x'))));
        assert_eq!("ε".parse::<BitString>().unwrap(), BitString::empty());
    }

    fn arb_pattern() -> impl Strategy<Value = (Vec<bool>, Vec<bool>)> {
        (
            proptest::collection::vec(any::<bool>(), 0..6),
            proptest::collection::vec(any::<bool>(), 1..5),
        )
    }

    proptest! {
        #[test]
        fn canonicalization_preserves_bits((pre, per) in arb_pattern()) {
            let p = EventuallyPeriodic::new(BitString::from_bits(pre.clone()), BitString::from_bits(per.clone()));
            for i in 0..40 {
                let expected = if i < pre.len() { pre[i] } else { per[(i - pre.len()) % per.len()] };
                prop_assert_eq!(p.bit(i), expected);
            }
        }

        #[test]
        fn first_difference_is_exact((a1, a2) in arb_pattern(), (b1, b2) in arb_pattern()) {
            let a = EventuallyPeriodic::new(BitString::from_bits(a1), BitString::from_bits(a2));
            let b = EventuallyPeriodic::new(BitString::from_bits(b1), BitString::from_bits(b2));
            match a.first_difference(&b) {
                None => {
                    prop_assert_eq!(&a, &b);
                    prop_assert_eq!(a.take(60), b.take(60));
                }
                Some(d) => {
                    prop_assert_ne!(&a, &b);
                    prop_assert_eq!(a.take(d), b.take(d));
                    prop_assert_ne!(a.bit(d), b.bit(d));
                }
            }
        }

        #[test]
        fn flip_changes_exactly_listed((pre, per) in arb_pattern(), pos in proptest::collection::btree_set(0usize..12, 0..4)) {
            let p = EventuallyPeriodic::new(BitString::from_bits(pre), BitString::from_bits(per));
            let positions: Vec<usize> = pos.iter().copied().collect();
            let q = p.flip(&positions);
            for i in 0..40 {
                prop_assert_eq!(q.bit(i), p.bit(i) ^ pos.contains(&i));
            }
        }
    }
}

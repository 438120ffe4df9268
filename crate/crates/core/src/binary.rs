//! Finite bit strings, infinite bit sources and run-block decomposition.
//!
//! Reals are read as the base-two expansion of their fractional part that has
//! infinitely many zeros, so a terminating expansion such as `3/4 = 0.11` is
//! continued with zeros and never with the trailing-ones form `0.10111...`.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::numerics::{Rational, RationalInterval};

/// A finite binary string. The empty string is written `λ` in docs and as the
/// empty text in every serialized form.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct BitString {
    bits: Vec<bool>,
}

impl BitString {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    pub fn from_slice(bits: &[bool]) -> Self {
        Self {
            bits: bits.to_vec(),
        }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            bits: vec![false; n],
        }
    }

    pub fn ones(n: usize) -> Self {
        Self {
            bits: vec![true; n],
        }
    }

    /// The `len`-bit big-endian rendering of `value` (low `len` bits).
    pub fn from_value(value: u128, len: usize) -> Self {
        let bits = (0..len)
            .rev()
            .map(|i| i < 128 && (value >> i) & 1 == 1)
            .collect();
        Self { bits }
    }

    /// Inverse of [`BitString::index`]: the `index`-th string in the order
    /// `λ, 0, 1, 00, 01, 10, 11, 000, ...`.
    pub fn from_index(index: u64) -> Self {
        let len = 63 - (index + 1).leading_zeros() as usize;
        let offset = index + 1 - (1u64 << len);
        Self::from_value(offset as u128, len)
    }

    /// Position of this string in the length-lexicographic order, which is the
    /// usual identification of strings with natural numbers (`λ` is 0).
    pub fn index(&self) -> BigUint {
        let mut value = BigUint::one();
        for &b in &self.bits {
            value <<= 1u32;
            if b {
                value += 1u32;
            }
        }
        value - 1u32
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.bits
    }

    pub fn into_bits(self) -> Vec<bool> {
        self.bits
    }

    /// Zero-based access.
    pub fn get(&self, i: usize) -> Option<bool> {
        self.bits.get(i).copied()
    }

    pub fn push(&mut self, bit: bool) {
        self.bits.push(bit);
    }

    pub fn extend_from(&mut self, other: &BitString) {
        self.bits.extend_from_slice(&other.bits);
    }

    pub fn with(&self, bit: bool) -> Self {
        let mut out = self.clone();
        out.push(bit);
        out
    }

    pub fn concat(&self, other: &BitString) -> Self {
        let mut out = self.clone();
        out.extend_from(other);
        out
    }

    /// The first `n` bits (the whole string if it is shorter).
    pub fn prefix(&self, n: usize) -> Self {
        Self::from_slice(&self.bits[..n.min(self.bits.len())])
    }

    pub fn is_prefix_of(&self, other: &BitString) -> bool {
        other.bits.starts_with(&self.bits)
    }

    pub fn ends_with(&self, suffix: &BitString) -> bool {
        self.bits.ends_with(&suffix.bits)
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        self.bits.iter().copied()
    }

    /// All `2^len` strings of the given length in lexicographic order.
    pub fn all_of_len(len: usize) -> impl Iterator<Item = BitString> {
        assert!(len < 64, "exhaustive enumeration limited to length < 64");
        (0..(1u64 << len)).map(move |v| BitString::from_value(v as u128, len))
    }

    /// All strings of length at most `max_len`, in length-lexicographic order.
    pub fn all_up_to(max_len: usize) -> impl Iterator<Item = BitString> {
        (0..=max_len).flat_map(BitString::all_of_len)
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "λ" {
            return Ok(Self::empty());
        }
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::invalid(format!("not a binary digit: {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Self::from_bits)
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.bits.is_empty() {
            f.write_str("λ")
        } else {
            write!(f, "\"{self}\"")
        }
    }
}

impl Ord for BitString {
    fn cmp(&self, other: &Self) -> Ordering {
        self.bits
            .len()
            .cmp(&other.bits.len())
            .then_with(|| self.bits.cmp(&other.bits))
    }
}

impl PartialOrd for BitString {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl From<&[bool]> for BitString {
    fn from(bits: &[bool]) -> Self {
        Self::from_slice(bits)
    }
}

/// Which family an infinite sequence belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SourceKind {
    DyadicRational,
    EventuallyPeriodic,
    Generator,
    EnumerationBacked,
}

enum Source {
    /// Long division of `remainder / den`, digits cached as produced.
    Rational {
        den: BigUint,
        remainder: BigUint,
        dyadic: bool,
        cache: Vec<bool>,
    },
    Periodic {
        prefix: Vec<bool>,
        cycle: Vec<bool>,
    },
    Generator {
        next: Box<dyn FnMut() -> bool + Send>,
        cache: Vec<bool>,
    },
    Enumerated {
        bounds: RationalInterval,
    },
}

/// An infinite binary sequence presented prefix-on-demand.
///
/// Reading a prefix may advance internal state (digit caches, generators), so
/// every accessor takes `&mut self`.
pub struct BitSource {
    source: Source,
}

impl BitSource {
    /// The expansion of a rational in `[0, 1)`. Dyadic rationals continue with
    /// zeros after their last one bit.
    pub fn rational(q: &Rational) -> Result<Self> {
        if q < &Rational::zero() || q >= &Rational::one() {
            return Err(Error::invalid(format!(
                "rational source must lie in [0, 1), got {q}"
            )));
        }
        let num = q.numer().to_biguint().expect("nonnegative numerator");
        let den = q.denom().to_biguint().expect("positive denominator");
        let dyadic = den.count_ones() == 1;
        Ok(Self {
            source: Source::Rational {
                den,
                remainder: num,
                dyadic,
                cache: Vec::new(),
            },
        })
    }

    /// `prefix` followed by `cycle` repeated forever.
    pub fn eventually_periodic(prefix: BitString, cycle: BitString) -> Result<Self> {
        if cycle.is_empty() {
            return Err(Error::invalid("periodic source needs a nonempty cycle"));
        }
        Ok(Self {
            source: Source::Periodic {
                prefix: prefix.into_bits(),
                cycle: cycle.into_bits(),
            },
        })
    }

    pub fn periodic(cycle: BitString) -> Result<Self> {
        Self::eventually_periodic(BitString::empty(), cycle)
    }

    pub fn zeros() -> Self {
        Self::periodic(BitString::zeros(1)).expect("nonempty cycle")
    }

    pub fn ones() -> Self {
        Self::periodic(BitString::ones(1)).expect("nonempty cycle")
    }

    /// A sequence produced bit by bit by a stateful generator.
    pub fn generator(next: impl FnMut() -> bool + Send + 'static) -> Self {
        Self {
            source: Source::Generator {
                next: Box::new(next),
                cache: Vec::new(),
            },
        }
    }

    /// A c.e. real known only through certified bounds `lo <= value <= hi`.
    /// Digits are released only where every real in the interval agrees.
    pub fn enumeration_backed(bounds: RationalInterval) -> Result<Self> {
        if bounds.lo() < &Rational::zero()
            || bounds.hi() > &Rational::one()
            || bounds.lo() >= &Rational::one()
        {
            return Err(Error::invalid(format!(
                "enumeration-backed bounds must lie in [0, 1]: {bounds}"
            )));
        }
        Ok(Self {
            source: Source::Enumerated { bounds },
        })
    }

    pub fn kind(&self) -> SourceKind {
        match &self.source {
            Source::Rational { dyadic: true, .. } => SourceKind::DyadicRational,
            Source::Rational { dyadic: false, .. } | Source::Periodic { .. } => {
                SourceKind::EventuallyPeriodic
            }
            Source::Generator { .. } => SourceKind::Generator,
            Source::Enumerated { .. } => SourceKind::EnumerationBacked,
        }
    }

    /// Tighten the bounds of an enumeration-backed source. The new bounds are
    /// intersected with the old ones so certified digits never change.
    pub fn refine(&mut self, bounds: RationalInterval) -> Result<()> {
        match &mut self.source {
            Source::Enumerated { bounds: current } => {
                let lo = current.lo().max(bounds.lo()).clone();
                let hi = current.hi().min(bounds.hi()).clone();
                *current = RationalInterval::new(lo, hi).map_err(|_| {
                    Error::invalid("refined bounds are disjoint from the current bounds")
                })?;
                Ok(())
            }
            _ => Err(Error::invalid("only enumeration-backed sources can be refined")),
        }
    }

    /// `X|n`, the first `n` bits.
    pub fn prefix(&mut self, n: usize) -> Result<BitString> {
        match &mut self.source {
            Source::Rational {
                den,
                remainder,
                cache,
                ..
            } => {
                while cache.len() < n {
                    *remainder <<= 1u32;
                    let bit = &*remainder >= den;
                    if bit {
                        *remainder -= &*den;
                    }
                    cache.push(bit);
                }
                Ok(BitString::from_slice(&cache[..n]))
            }
            Source::Periodic { prefix, cycle } => {
                let bits = (0..n)
                    .map(|i| {
                        if i < prefix.len() {
                            prefix[i]
                        } else {
                            cycle[(i - prefix.len()) % cycle.len()]
                        }
                    })
                    .collect();
                Ok(BitString::from_bits(bits))
            }
            Source::Generator { next, cache } => {
                while cache.len() < n {
                    cache.push(next());
                }
                Ok(BitString::from_slice(&cache[..n]))
            }
            Source::Enumerated { bounds } => certified_prefix(bounds, n),
        }
    }

    /// `X(n)`, the `n`-th bit, one-based.
    pub fn bit(&mut self, n: usize) -> Result<bool> {
        if n == 0 {
            return Err(Error::invalid("bit positions start at 1"));
        }
        let p = self.prefix(n)?;
        Ok(p.get(n - 1).expect("prefix has n bits"))
    }
}

impl fmt::Debug for BitSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BitSource").field("kind", &self.kind()).finish()
    }
}

/// `floor(q * 2^n)` for nonnegative `q`.
fn scaled_floor(q: &Rational, n: usize) -> BigUint {
    let scaled = q.numer().to_biguint().expect("nonnegative") << n;
    scaled / q.denom().to_biguint().expect("positive")
}

fn certified_prefix(bounds: &RationalInterval, n: usize) -> Result<BitString> {
    let lo = scaled_floor(bounds.lo(), n);
    let hi = scaled_floor(bounds.hi(), n);
    if lo == hi {
        return Ok(bits_of(&lo, n));
    }
    // Locate the first digit on which the endpoints disagree.
    let mut stable = 0;
    while stable < n && scaled_floor(bounds.lo(), stable + 1) == scaled_floor(bounds.hi(), stable + 1)
    {
        stable += 1;
    }
    Err(Error::UnstableDigits {
        position: stable + 1,
    })
}

fn bits_of(value: &BigUint, n: usize) -> BitString {
    BitString::from_bits((0..n).rev().map(|i| value.bit(i as u64)).collect())
}

/// Run-block decomposition `1^b0 0^a1 1^b1 0^a2 1^b2 ...` of a finite string.
///
/// Every complete pair has `a >= 1` and `b >= 1`. A trailing block of zeros
/// that has not been closed by a one is kept apart in `trailing_zeros`, since
/// its final length is not yet known.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RunBlocks {
    pub leading_ones: usize,
    pub pairs: Vec<(usize, usize)>,
    pub trailing_zeros: Option<usize>,
}

impl RunBlocks {
    /// Whether the analysed string ends inside an unfinished zero block.
    pub fn tail_incomplete(&self) -> bool {
        self.trailing_zeros.is_some()
    }

    pub fn reconstruct(&self) -> BitString {
        let mut bits = vec![true; self.leading_ones];
        for &(a, b) in &self.pairs {
            bits.extend(std::iter::repeat(false).take(a));
            bits.extend(std::iter::repeat(true).take(b));
        }
        if let Some(a) = self.trailing_zeros {
            bits.extend(std::iter::repeat(false).take(a));
        }
        BitString::from_bits(bits)
    }
}

pub fn decompose_runs(x: &BitString) -> RunBlocks {
    let bits = x.as_slice();
    let leading_ones = bits.iter().take_while(|&&b| b).count();
    let mut blocks = RunBlocks {
        leading_ones,
        ..RunBlocks::default()
    };
    let mut i = leading_ones;
    while i < bits.len() {
        let zeros = bits[i..].iter().take_while(|&&b| !b).count();
        i += zeros;
        let ones = bits[i..].iter().take_while(|&&b| b).count();
        i += ones;
        if ones == 0 {
            blocks.trailing_zeros = Some(zeros);
        } else {
            blocks.pairs.push((zeros, ones));
        }
    }
    blocks
}

pub fn max_zero_run(x: &BitString) -> usize {
    x.as_slice()
        .split(|&b| b)
        .map(<[bool]>::len)
        .max()
        .unwrap_or(0)
}

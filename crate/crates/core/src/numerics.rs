//! Exact rationals and certified rational intervals.
//!
//! The only transcendental family needed is `2^(-l/T)` for rational `T`.
//! [`pow2_neg`] brackets it between dyadic rationals found by bisection, with
//! every comparison carried out on exact integers.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

pub fn rational(num: i64, den: i64) -> Rational {
    Rational::new(num.into(), den.into())
}

/// `2^-e` as an exact rational.
pub fn pow2_inv(e: u64) -> Rational {
    Rational::new(BigInt::one(), BigInt::one() << e)
}

/// Render as `num/den`, always with an explicit denominator.
pub fn format_rational(q: &Rational) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

/// Parse `num/den` or a bare integer.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::invalid(format!("not a rational: {s:?}"));
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(Error::invalid(format!("zero denominator in {s:?}")));
            }
            Ok(Rational::new(n, d))
        }
        None => s
            .parse::<BigInt>()
            .map(Rational::from_integer)
            .map_err(|_| bad()),
    }
}

/// Decimal expansion truncated toward zero after `places` digits. Inexact
/// renderings carry a ` (truncated)` marker.
pub fn format_decimal(q: &Rational, places: usize) -> String {
    let negative = q.is_negative();
    let abs = q.abs();
    let scale = BigInt::from(10u32).pow(places as u32);
    let scaled = abs.numer() * &scale;
    let digits = &scaled / abs.denom();
    let exact = (&scaled % abs.denom()).is_zero();
    let int_part = &digits / &scale;
    let frac_part = &digits % &scale;
    let mut out = String::new();
    if negative && !digits.is_zero() {
        out.push('-');
    }
    out.push_str(&int_part.to_string());
    if places > 0 {
        out.push('.');
        out.push_str(&format!("{:0>width$}", frac_part.to_string(), width = places));
    }
    if !exact {
        out.push_str(" (truncated)");
    }
    out
}

/// Smallest `c` with `2^c >= n`, for `n >= 1`.
pub fn ceil_log2(n: u64) -> u32 {
    if n <= 1 {
        0
    } else {
        64 - (n - 1).leading_zeros()
    }
}

/// A closed interval with exact rational endpoints, `lo <= hi`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RationalInterval {
    lo: Rational,
    hi: Rational,
}

impl RationalInterval {
    pub fn new(lo: Rational, hi: Rational) -> Result<Self> {
        if lo > hi {
            return Err(Error::invalid(format!(
                "interval endpoints out of order: [{}, {}]",
                format_rational(&lo),
                format_rational(&hi)
            )));
        }
        Ok(Self { lo, hi })
    }

    pub fn point(value: Rational) -> Self {
        Self {
            lo: value.clone(),
            hi: value,
        }
    }

    pub fn zero() -> Self {
        Self::point(Rational::zero())
    }

    pub fn lo(&self) -> &Rational {
        &self.lo
    }

    pub fn hi(&self) -> &Rational {
        &self.hi
    }

    pub fn width(&self) -> Rational {
        &self.hi - &self.lo
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn contains(&self, v: &Rational) -> bool {
        &self.lo <= v && v <= &self.hi
    }

    /// Multiply by a nonnegative integer.
    pub fn scale(&self, factor: u64) -> Self {
        let f = Rational::from_integer(factor.into());
        Self {
            lo: &self.lo * &f,
            hi: &self.hi * &f,
        }
    }
}

impl fmt::Display for RationalInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}, {}]",
            format_rational(&self.lo),
            format_rational(&self.hi)
        )
    }
}

/// Outcome of a certified comparison.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Tristate {
    Yes,
    No,
    Unknown,
}

pub fn interval_add(a: &RationalInterval, b: &RationalInterval) -> RationalInterval {
    RationalInterval {
        lo: &a.lo + &b.lo,
        hi: &a.hi + &b.hi,
    }
}

/// Whether every value of `a` is at most every value of `b`.
pub fn interval_leq(a: &RationalInterval, b: &RationalInterval) -> Tristate {
    if a.hi <= b.lo {
        Tristate::Yes
    } else if a.lo > b.hi {
        Tristate::No
    } else {
        Tristate::Unknown
    }
}

/// Certified bracket of `2^(-len/t)` of width at most `2^-k`.
///
/// Writing `t = n/d` in lowest terms, the exponent is `len*d/n = q + r/n` with
/// `0 <= r < n`. When `r = 0` the value is the dyadic point `2^-q`. Otherwise
/// `w = 2^(-r/n)` lies in `(1/2, 1)` and is bracketed by `a/2^j <= w < (a+1)/2^j`
/// through bisection on `a`, testing `a^n <= 2^(j*n - r)`.
pub fn pow2_neg(len: u64, t: &Rational, k: u32) -> Result<RationalInterval> {
    if !t.is_positive() {
        return Err(Error::invalid(format!(
            "temperature must be positive, got {}",
            format_rational(t)
        )));
    }
    if k == 0 {
        return Err(Error::invalid("precision must be at least one bit"));
    }
    let n = t.numer().to_biguint().expect("positive");
    let d = t.denom().to_biguint().expect("positive");
    let exponent = BigUint::from(len) * &d;
    let q = &exponent / &n;
    let r = &exponent % &n;
    let q = q
        .to_u64()
        .ok_or_else(|| Error::invalid("exponent too large"))?;
    if r.is_zero() {
        return Ok(RationalInterval::point(pow2_inv(q)));
    }
    let n = n
        .to_u64()
        .ok_or_else(|| Error::invalid("temperature numerator too large"))?;
    let r = r.to_u64().expect("r < n");

    // Width of the final bracket is 2^-(j+q); pick j so that j + q >= k.
    let j = (k as u64).saturating_sub(q).max(1);
    let target = BigUint::one() << (j * n - r);
    let mut lo = BigUint::one() << (j - 1);
    let mut hi = BigUint::one() << j;
    while &hi - &lo > BigUint::one() {
        let mid: BigUint = (&lo + &hi) >> 1u32;
        if mid.pow(n as u32) <= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let denom = BigInt::one() << (j + q);
    Ok(RationalInterval {
        lo: Rational::new(BigInt::from(lo), denom.clone()),
        hi: Rational::new(BigInt::from(hi), denom),
    })
}

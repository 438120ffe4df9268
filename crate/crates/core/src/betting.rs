//! Martingales as betting strategies with exact rational capital.
//!
//! A martingale `B` obeys the fairness law `B(x0) + B(x1) = 2 B(x)`. Partial
//! martingales may be undefined, provided their domain is closed under
//! prefixes and `x0` is defined exactly when `x1` is.

use std::io::Write;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::binary::{BitSource, BitString};
use crate::error::{Error, Result};
use crate::numerics::Rational;
use crate::prediction::{Prediction, Predictor};

/// Deepest tree [`check_fairness`] will exhaust.
pub const MAX_FAIRNESS_DEPTH: usize = 16;

pub trait Martingale: Send + Sync {
    /// `B(x)`, or `None` where a partial martingale is undefined.
    fn capital(&self, x: &[bool]) -> Option<Rational>;

    /// `B(x|0), B(x|1), ...` up to the first undefined prefix.
    fn trace(&self, x: &[bool]) -> Vec<Rational> {
        (0..=x.len()).map_while(|i| self.capital(&x[..i])).collect()
    }
}

type EvalFn = Arc<dyn Fn(&[bool]) -> Option<Rational> + Send + Sync>;

#[derive(Clone)]
enum Eval {
    Direct(EvalFn),
    /// The betting strategy driven by a predictor: stake everything on the
    /// predicted bit, sit out on a suspension.
    Compiled(Arc<dyn Predictor>),
}

impl Eval {
    fn capital(&self, x: &[bool]) -> Option<Rational> {
        match self {
            Eval::Direct(f) => f(x),
            // Starting from 1 the recursion only ever doubles, keeps or
            // zeroes the capital, so track the exponent instead.
            Eval::Compiled(predictor) => {
                let predictions = predictor.predict_along(x);
                let mut doublings = 0usize;
                for (i, &bit) in x.iter().enumerate() {
                    match predictions[i]?.bit() {
                        None => {}
                        Some(p) if p == bit => doublings += 1,
                        Some(_) => {
                            return predictions[i + 1..x.len()]
                                .iter()
                                .all(Option::is_some)
                                .then(Rational::zero)
                        }
                    }
                }
                Some(Rational::from_integer(BigInt::one() << doublings))
            }
        }
    }

    fn trace(&self, x: &[bool]) -> Vec<Rational> {
        match self {
            Eval::Direct(f) => (0..=x.len()).map_while(|i| f(&x[..i])).collect(),
            Eval::Compiled(predictor) => {
                let predictions = predictor.predict_along(x);
                let mut values = Vec::with_capacity(x.len() + 1);
                let mut capital = Rational::one();
                values.push(capital.clone());
                for (i, &bit) in x.iter().enumerate() {
                    capital = match predictions[i] {
                        None => break,
                        Some(p) => bet(&capital, p, bit),
                    };
                    values.push(capital.clone());
                }
                values
            }
        }
    }
}

/// Capital after one round: `B(x0)` is `B(x)` on suspension, `2B(x)` when 0
/// was predicted and `0` when 1 was, and `B(x1) = 2B(x) - B(x0)`.
pub(crate) fn bet(capital: &Rational, prediction: Prediction, bit: bool) -> Rational {
    let doubled = capital * Rational::from_integer(BigInt::from(2));
    let on_zero = match prediction {
        Prediction::Suspend => capital.clone(),
        Prediction::Zero => doubled.clone(),
        Prediction::One => Rational::zero(),
    };
    if bit {
        doubled - on_zero
    } else {
        on_zero
    }
}

/// A martingale defined on every string.
#[derive(Clone)]
pub struct MartingaleTotal {
    eval: Eval,
}

impl MartingaleTotal {
    pub fn new(f: impl Fn(&[bool]) -> Rational + Send + Sync + 'static) -> Self {
        Self {
            eval: Eval::Direct(Arc::new(move |x| Some(f(x)))),
        }
    }

    pub fn constant(value: Rational) -> Self {
        Self::new(move |_| value.clone())
    }

    pub(crate) fn compiled(predictor: Arc<dyn Predictor>) -> Self {
        Self {
            eval: Eval::Compiled(predictor),
        }
    }

    /// Total evaluation; always defined.
    pub fn value(&self, x: &[bool]) -> Rational {
        self.eval.capital(x).expect("total martingale")
    }
}

impl Martingale for MartingaleTotal {
    fn capital(&self, x: &[bool]) -> Option<Rational> {
        self.eval.capital(x)
    }

    fn trace(&self, x: &[bool]) -> Vec<Rational> {
        self.eval.trace(x)
    }
}

/// A martingale that may be undefined on part of the tree.
#[derive(Clone)]
pub struct MartingalePartial {
    eval: Eval,
}

impl MartingalePartial {
    pub fn new(f: impl Fn(&[bool]) -> Option<Rational> + Send + Sync + 'static) -> Self {
        Self {
            eval: Eval::Direct(Arc::new(f)),
        }
    }

    pub(crate) fn compiled(predictor: Arc<dyn Predictor>) -> Self {
        Self {
            eval: Eval::Compiled(predictor),
        }
    }
}

impl From<MartingaleTotal> for MartingalePartial {
    fn from(m: MartingaleTotal) -> Self {
        Self { eval: m.eval }
    }
}

impl Martingale for MartingalePartial {
    fn capital(&self, x: &[bool]) -> Option<Rational> {
        self.eval.capital(x)
    }

    fn trace(&self, x: &[bool]) -> Vec<Rational> {
        self.eval.trace(x)
    }
}

/// A c.e. martingale given by stage-indexed rational lower approximations
/// that are nondecreasing in the stage for every string.
#[derive(Clone)]
pub struct CeMartingale {
    approx: Arc<dyn Fn(u64, &[bool]) -> Rational + Send + Sync>,
}

impl CeMartingale {
    pub fn new(approx: impl Fn(u64, &[bool]) -> Rational + Send + Sync + 'static) -> Self {
        Self {
            approx: Arc::new(approx),
        }
    }

    pub fn approximation(&self, stage: u64, x: &[bool]) -> Rational {
        (self.approx)(stage, x)
    }

    /// First `(x, s)` with `|x| < depth`, `s < stages` at which the
    /// approximation decreases from stage `s` to `s + 1`.
    pub fn find_decrease(&self, depth: usize, stages: u64) -> Option<(BitString, u64)> {
        BitString::all_up_to(depth.saturating_sub(1)).find_map(|x| {
            (0..stages)
                .find(|&s| self.approximation(s + 1, x.as_slice()) < self.approximation(s, x.as_slice()))
                .map(|s| (x.clone(), s))
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FairnessFailure {
    /// `B(x0) + B(x1) != 2 B(x)`.
    Unfair,
    Negative,
    /// Exactly one of `x0`, `x1` is defined.
    UnpairedChildren,
    /// A child is defined below an undefined node.
    NotPrefixClosed,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FairnessVerdict {
    Pass,
    Fail {
        witness: BitString,
        failure: FairnessFailure,
    },
}

impl FairnessVerdict {
    pub fn passed(&self) -> bool {
        matches!(self, FairnessVerdict::Pass)
    }
}

/// Check the martingale laws at every node `x` with `|x| < depth`.
pub fn check_fairness(b: &dyn Martingale, depth: usize) -> Result<FairnessVerdict> {
    if depth > MAX_FAIRNESS_DEPTH {
        return Err(Error::invalid(format!(
            "fairness depth {depth} exceeds {MAX_FAIRNESS_DEPTH}"
        )));
    }
    let mut stack = vec![(BitString::empty(), b.capital(&[]))];
    while let Some((x, value)) = stack.pop() {
        let fail = |failure| {
            Ok(FairnessVerdict::Fail {
                witness: x.clone(),
                failure,
            })
        };
        if value.as_ref().is_some_and(Signed::is_negative) {
            return fail(FairnessFailure::Negative);
        }
        if x.len() >= depth {
            continue;
        }
        let (x0, x1) = (x.with(false), x.with(true));
        let (c0, c1) = (b.capital(x0.as_slice()), b.capital(x1.as_slice()));
        match (&value, &c0, &c1) {
            (None, None, None) => {}
            (None, _, _) => return fail(FairnessFailure::NotPrefixClosed),
            (Some(_), Some(_), None) | (Some(_), None, Some(_)) => {
                return fail(FairnessFailure::UnpairedChildren)
            }
            (Some(v), Some(a), Some(c)) => {
                if a + c != v * Rational::from_integer(BigInt::from(2)) {
                    return fail(FairnessFailure::Unfair);
                }
            }
            (Some(_), None, None) => {}
        }
        stack.push((x1, c1));
        stack.push((x0, c0));
    }
    Ok(FairnessVerdict::Pass)
}

/// Capital along a sequence, `values[i] = B(X|i)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CapitalTrace {
    pub values: Vec<Rational>,
    /// Largest `i` with `B(X|i)` defined.
    pub defined_up_to: usize,
    pub requested: usize,
}

impl CapitalTrace {
    pub fn fully_defined(&self) -> bool {
        self.defined_up_to == self.requested
    }

    pub fn write_csv(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "n,capital_num,capital_den")?;
        for (n, v) in self.values.iter().enumerate() {
            writeln!(out, "{n},{},{}", v.numer(), v.denom())?;
        }
        Ok(())
    }
}

pub fn run_capital(b: &dyn Martingale, x: &mut BitSource, n: usize) -> Result<CapitalTrace> {
    let prefix = x.prefix(n)?;
    let values = b.trace(prefix.as_slice());
    let defined_up_to = values.len().saturating_sub(1);
    Ok(CapitalTrace {
        values,
        defined_up_to,
        requested: n,
    })
}

/// A finite observation of capital growth. Reaching a threshold within a
/// horizon is evidence only; success means unbounded capital.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Observation {
    Reached(usize),
    NotReached,
}

pub fn succeeds_empirically(
    b: &dyn Martingale,
    x: &mut BitSource,
    threshold: &Rational,
    horizon: usize,
) -> Result<Observation> {
    if horizon == 0 {
        return Err(Error::invalid("horizon must be at least 1"));
    }
    if !threshold.is_positive() {
        return Err(Error::invalid("threshold must be positive"));
    }
    let trace = run_capital(b, x, horizon)?;
    Ok(trace
        .values
        .iter()
        .position(|v| v >= threshold)
        .map_or(Observation::NotReached, Observation::Reached))
}

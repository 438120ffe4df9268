//! Predictors of the next bit, automata with outputs, the predictor to
//! martingale compilers and the run-length automaton synthesizer.
//!
//! A predictor maps each prefix `X|n` to `0`, `1` or `N` (suspend). It is
//! sound on `X` when every committed prediction equals `X(n+1)`; it is a
//! strong predictor when in addition it commits infinitely often. Only the
//! first condition can be checked on a finite horizon, so reports here record
//! counts and positions and leave the infinitude question to the reader.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::sync::Arc;

use crate::betting::{MartingalePartial, MartingaleTotal};
use crate::binary::{decompose_runs, BitSource, BitString};
use crate::error::{Error, Result};
use crate::numerics::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Prediction {
    Zero,
    One,
    /// The prediction of the next bit is suspended.
    Suspend,
}

impl Prediction {
    pub fn bit(self) -> Option<bool> {
        match self {
            Prediction::Zero => Some(false),
            Prediction::One => Some(true),
            Prediction::Suspend => None,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Prediction::Zero => '0',
            Prediction::One => '1',
            Prediction::Suspend => 'N',
        }
    }
}

impl fmt::Display for Prediction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

impl FromStr for Prediction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "0" => Ok(Prediction::Zero),
            "1" => Ok(Prediction::One),
            "N" | "n" => Ok(Prediction::Suspend),
            other => Err(Error::invalid(format!("not a prediction: {other:?}"))),
        }
    }
}

pub trait Predictor: Send + Sync {
    /// `F(x)`, or `None` where a partial predictor is undefined.
    fn predict(&self, x: &[bool]) -> Option<Prediction>;

    /// `F(x|0), F(x|1), ..., F(x)`.
    fn predict_along(&self, x: &[bool]) -> Vec<Option<Prediction>> {
        (0..=x.len()).map(|i| self.predict(&x[..i])).collect()
    }
}

type TotalFn = Arc<dyn Fn(&[bool]) -> Prediction + Send + Sync>;
type PartialFn = Arc<dyn Fn(&[bool]) -> Option<Prediction> + Send + Sync>;

#[derive(Clone)]
enum TotalInner {
    Fn(TotalFn),
    Automaton(Arc<PredictorFAO>),
}

/// A predictor defined on every string.
#[derive(Clone)]
pub struct TotalPredictor {
    inner: TotalInner,
}

impl TotalPredictor {
    pub fn new(f: impl Fn(&[bool]) -> Prediction + Send + Sync + 'static) -> Self {
        Self {
            inner: TotalInner::Fn(Arc::new(f)),
        }
    }

    pub fn constant(p: Prediction) -> Self {
        Self::new(move |_| p)
    }

    pub fn value(&self, x: &[bool]) -> Prediction {
        match &self.inner {
            TotalInner::Fn(f) => f(x),
            TotalInner::Automaton(m) => m.run(x),
        }
    }

    pub fn into_partial(self) -> PartialPredictor {
        PartialPredictor {
            inner: PartialInner::Total(self),
        }
    }
}

impl Predictor for TotalPredictor {
    fn predict(&self, x: &[bool]) -> Option<Prediction> {
        Some(self.value(x))
    }

    fn predict_along(&self, x: &[bool]) -> Vec<Option<Prediction>> {
        match &self.inner {
            TotalInner::Fn(f) => (0..=x.len()).map(|i| Some(f(&x[..i]))).collect(),
            TotalInner::Automaton(m) => m.predict_along(x),
        }
    }
}

#[derive(Clone)]
enum PartialInner {
    Fn(PartialFn),
    Total(TotalPredictor),
}

/// A predictor that may be undefined on some strings.
#[derive(Clone)]
pub struct PartialPredictor {
    inner: PartialInner,
}

impl PartialPredictor {
    pub fn new(f: impl Fn(&[bool]) -> Option<Prediction> + Send + Sync + 'static) -> Self {
        Self {
            inner: PartialInner::Fn(Arc::new(f)),
        }
    }
}

impl Predictor for PartialPredictor {
    fn predict(&self, x: &[bool]) -> Option<Prediction> {
        match &self.inner {
            PartialInner::Fn(f) => f(x),
            PartialInner::Total(t) => t.predict(x),
        }
    }

    fn predict_along(&self, x: &[bool]) -> Vec<Option<Prediction>> {
        match &self.inner {
            PartialInner::Fn(f) => (0..=x.len()).map(|i| f(&x[..i])).collect(),
            PartialInner::Total(t) => t.predict_along(x),
        }
    }
}

/// Deterministic finite automaton over `{0,1}` whose output is a function of
/// the state it ends in. States are `0..n` with `0` the usual start.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PredictorFAO {
    transitions: Vec<[usize; 2]>,
    start: usize,
    outputs: Vec<Prediction>,
}

impl PredictorFAO {
    pub fn new(transitions: Vec<[usize; 2]>, start: usize, outputs: Vec<Prediction>) -> Result<Self> {
        let n = transitions.len();
        if n == 0 {
            return Err(Error::invalid("automaton needs at least one state"));
        }
        if outputs.len() != n {
            return Err(Error::invalid("output function must cover every state"));
        }
        if start >= n {
            return Err(Error::invalid(format!("start state {start} out of range")));
        }
        if let Some((q, _)) = transitions
            .iter()
            .enumerate()
            .find(|(_, t)| t[0] >= n || t[1] >= n)
        {
            return Err(Error::invalid(format!("transition from state {q} leaves the automaton")));
        }
        Ok(Self {
            transitions,
            start,
            outputs,
        })
    }

    pub fn state_count(&self) -> usize {
        self.transitions.len()
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn delta(&self, state: usize, bit: bool) -> usize {
        self.transitions[state][bit as usize]
    }

    pub fn output(&self, state: usize) -> Prediction {
        self.outputs[state]
    }

    pub fn final_state(&self, x: &[bool]) -> usize {
        x.iter().fold(self.start, |q, &b| self.delta(q, b))
    }

    /// `M(x) = f(q_n)` where `q_i = delta(q_(i-1), x_i)`.
    pub fn run(&self, x: &[bool]) -> Prediction {
        self.output(self.final_state(x))
    }

    pub fn into_total(self) -> TotalPredictor {
        TotalPredictor {
            inner: TotalInner::Automaton(Arc::new(self)),
        }
    }

    /// Text table: `states`, `start`, one `delta <q> <bit> <q'>` line per
    /// transition and one `output <q> <0|1|N>` line per state.
    pub fn to_text(&self) -> String {
        let mut out = format!("states {}\nstart {}\n", self.state_count(), self.start);
        for (q, t) in self.transitions.iter().enumerate() {
            for (bit, next) in t.iter().enumerate() {
                out.push_str(&format!("delta {q} {bit} {next}\n"));
            }
        }
        for (q, p) in self.outputs.iter().enumerate() {
            out.push_str(&format!("output {q} {p}\n"));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut states: Option<usize> = None;
        let mut start = None;
        let mut transitions: Vec<[Option<usize>; 2]> = Vec::new();
        let mut outputs: Vec<Option<Prediction>> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let lineno = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let num = |s: &str| -> Result<usize> {
                s.parse()
                    .map_err(|_| Error::parse(lineno, format!("expected a natural number, got {s:?}")))
            };
            let in_range = |q: usize| -> Result<usize> {
                match states {
                    Some(n) if q < n => Ok(q),
                    Some(_) => Err(Error::parse(lineno, format!("state {q} out of range"))),
                    None => Err(Error::parse(lineno, "states line must come first")),
                }
            };
            match fields.as_slice() {
                ["states", n] => {
                    let n = num(n)?;
                    states = Some(n);
                    transitions = vec![[None; 2]; n];
                    outputs = vec![None; n];
                }
                ["start", q] => start = Some(in_range(num(q)?)?),
                ["delta", q, bit, next] => {
                    let q = in_range(num(q)?)?;
                    let bit = match *bit {
                        "0" => 0,
                        "1" => 1,
                        other => return Err(Error::parse(lineno, format!("bad input symbol {other:?}"))),
                    };
                    transitions[q][bit] = Some(in_range(num(next)?)?);
                }
                ["output", q, p] => {
                    let q = in_range(num(q)?)?;
                    outputs[q] = Some(p.parse().map_err(|e: Error| Error::parse(lineno, e.to_string()))?);
                }
                _ => return Err(Error::parse(lineno, format!("unrecognised line {raw:?}"))),
            }
        }
        let transitions = transitions
            .into_iter()
            .enumerate()
            .map(|(q, t)| match t {
                [Some(a), Some(b)] => Ok([a, b]),
                _ => Err(Error::invalid(format!("state {q} is missing a transition"))),
            })
            .collect::<Result<Vec<_>>>()?;
        let outputs = outputs
            .into_iter()
            .enumerate()
            .map(|(q, p)| p.ok_or_else(|| Error::invalid(format!("state {q} has no output"))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(transitions, start.unwrap_or(0), outputs)
    }
}

impl Predictor for PredictorFAO {
    fn predict(&self, x: &[bool]) -> Option<Prediction> {
        Some(self.run(x))
    }

    fn predict_along(&self, x: &[bool]) -> Vec<Option<Prediction>> {
        let mut q = self.start;
        let mut out = Vec::with_capacity(x.len() + 1);
        out.push(Some(self.output(q)));
        for &b in x {
            q = self.delta(q, b);
            out.push(Some(self.output(q)));
        }
        out
    }
}

pub fn fao_run(m: &PredictorFAO, x: &BitString) -> Prediction {
    m.run(x.as_slice())
}

/// What a predictor did over `X|0, ..., X|(horizon-1)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PredictabilityReport {
    pub horizon: usize,
    /// Positions at which a bit was predicted, right or wrong.
    pub predictions_made: usize,
    /// Positions `n` with `F(X|n) != X(n+1)`.
    pub mispredictions: Vec<usize>,
    pub suspensions: usize,
    /// First `n` at which a partial predictor was undefined; positions from
    /// there on were not evaluated.
    pub undefined_at: Option<usize>,
    predictions: Vec<Prediction>,
    next_bits: BitString,
}

impl PredictabilityReport {
    pub fn sound(&self) -> bool {
        self.mispredictions.is_empty() && self.undefined_at.is_none()
    }

    pub fn evaluated(&self) -> usize {
        self.predictions.len()
    }

    /// Per-position CSV `n,prediction,next_bit,outcome`.
    pub fn write_csv(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "n,prediction,next_bit,outcome")?;
        for (n, p) in self.predictions.iter().enumerate() {
            let bit = self.next_bits.get(n).expect("bit recorded") as u8;
            let outcome = match p.bit() {
                None => "suspended",
                Some(b) if b == (bit == 1) => "correct",
                Some(_) => "wrong",
            };
            writeln!(out, "{n},{p},{bit},{outcome}")?;
        }
        if let Some(n) = self.undefined_at {
            let bit = self.next_bits.get(n).expect("bit recorded") as u8;
            writeln!(out, "{n},undefined,{bit},undefined")?;
        }
        Ok(())
    }
}

impl fmt::Display for PredictabilityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "horizon={}", self.horizon)?;
        writeln!(f, "predictions={}", self.predictions_made)?;
        writeln!(f, "errors={}", self.mispredictions.len())?;
        writeln!(f, "suspensions={}", self.suspensions)?;
        match self.undefined_at {
            Some(n) => writeln!(f, "undefined_at={n}")?,
            None => writeln!(f, "undefined_at=none")?,
        }
        if !self.mispredictions.is_empty() {
            let shown: Vec<String> = self.mispredictions.iter().take(20).map(usize::to_string).collect();
            let more = if self.mispredictions.len() > 20 { ",..." } else { "" };
            writeln!(f, "misprediction_positions={}{more}", shown.join(","))?;
        }
        Ok(())
    }
}

pub fn check_predictability(
    f: &dyn Predictor,
    x: &mut BitSource,
    horizon: usize,
) -> Result<PredictabilityReport> {
    if horizon == 0 {
        return Err(Error::invalid("horizon must be at least 1"));
    }
    let bits = x.prefix(horizon)?;
    let along = f.predict_along(&bits.as_slice()[..horizon - 1]);
    let mut report = PredictabilityReport {
        horizon,
        predictions_made: 0,
        mispredictions: Vec::new(),
        suspensions: 0,
        undefined_at: None,
        predictions: Vec::with_capacity(horizon),
        next_bits: bits.clone(),
    };
    for (n, p) in along.into_iter().enumerate() {
        let Some(p) = p else {
            report.undefined_at = Some(n);
            break;
        };
        match p.bit() {
            None => report.suspensions += 1,
            Some(b) => {
                report.predictions_made += 1;
                if Some(b) != bits.get(n) {
                    report.mispredictions.push(n);
                }
            }
        }
        report.predictions.push(p);
    }
    Ok(report)
}

/// The betting strategy driven by `f`: `B(λ) = 1`, and on each string `x`
/// stake the whole capital on `F(x)` or stand aside on a suspension.
pub fn compile_martingale_total(f: TotalPredictor) -> MartingaleTotal {
    MartingaleTotal::compiled(Arc::new(f))
}

/// As [`compile_martingale_total`], with `B` undefined below any string at
/// which `f` is undefined.
pub fn compile_martingale_partial(f: PartialPredictor) -> MartingalePartial {
    MartingalePartial::compiled(Arc::new(f))
}

/// Automaton predicting a one after every run of `run_len` zeros that starts
/// at or after position `skip`.
///
/// States `q_0..q_(skip+run_len)`: the first `skip` states count off input
/// unconditionally, then `q_(skip+i)` records `i` zeros since the last one.
/// `q_(skip+run_len)` loops on zero and outputs one; every other state
/// suspends. So `M(x) = 1` exactly when `x = y 0^run_len` with `|y| >= skip`,
/// and `M` never outputs zero.
pub fn synth_runlength_fao(skip: usize, run_len: usize) -> Result<PredictorFAO> {
    if run_len == 0 {
        return Err(Error::invalid("run length must be at least 1"));
    }
    let last = skip + run_len;
    let transitions = (0..=last)
        .map(|i| {
            if i < skip {
                [i + 1, i + 1]
            } else if i < last {
                [i + 1, skip]
            } else {
                [last, skip]
            }
        })
        .collect();
    let outputs = (0..=last)
        .map(|i| if i == last { Prediction::One } else { Prediction::Suspend })
        .collect();
    PredictorFAO::new(transitions, 0, outputs)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunLengthEstimate {
    Params { skip: usize, run_len: usize },
    NoZeros,
}

/// Guess `(m, L)` for [`synth_runlength_fao`] from a finite sample.
///
/// `L` is the longest complete zero run (one followed by a one) lying wholly
/// inside the trailing `tail_fraction` of `x`; `m` is the index just past the
/// last complete zero run in `x` longer than `L`, or 0. This is a heuristic
/// for a limit superior and carries no guarantee.
pub fn estimate_runlength_params(x: &BitString, tail_fraction: &Rational) -> Result<RunLengthEstimate> {
    let zero = Rational::from_integer(0.into());
    let one = Rational::from_integer(1.into());
    if tail_fraction <= &zero || tail_fraction > &one {
        return Err(Error::invalid("tail fraction must lie in (0, 1]"));
    }
    let len = x.len();
    let tail_len = (tail_fraction * Rational::from_integer(len.into())).ceil();
    let tail_len: usize = tail_len.to_integer().try_into().expect("at most len");
    let tail_start = len - tail_len;

    // Complete zero runs as (start, end) with end exclusive.
    let blocks = decompose_runs(x);
    let mut runs = Vec::new();
    let mut pos = blocks.leading_ones;
    for &(a, b) in &blocks.pairs {
        runs.push((pos, pos + a));
        pos += a + b;
    }

    let Some(run_len) = runs
        .iter()
        .filter(|(start, _)| *start >= tail_start)
        .map(|(start, end)| end - start)
        .max()
    else {
        return Ok(RunLengthEstimate::NoZeros);
    };
    let skip = runs
        .iter()
        .rev()
        .find(|(start, end)| end - start > run_len)
        .map_or(0, |&(_, end)| end);
    Ok(RunLengthEstimate::Params { skip, run_len })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunBound {
    /// Least `n` such that `X|n` contains `0^d`.
    Violated(usize),
    NotViolatedUpTo(usize),
}

pub fn check_run_bound(x: &mut BitSource, d: usize, horizon: usize) -> Result<RunBound> {
    if d == 0 {
        return Err(Error::invalid("run bound must be at least 1"));
    }
    if horizon < d {
        return Err(Error::invalid("horizon must be at least the run bound"));
    }
    let bits = x.prefix(horizon)?;
    let mut run = 0;
    for (i, b) in bits.iter().enumerate() {
        run = if b { 0 } else { run + 1 };
        if run == d {
            return Ok(RunBound::Violated(i + 1));
        }
    }
    Ok(RunBound::NotViolatedUpTo(horizon))
}

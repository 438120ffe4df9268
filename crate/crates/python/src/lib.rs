//! Python bindings. Rationals cross the boundary as `"num/den"` strings and
//! bit strings as `'0'`/`'1'` text, so nothing is rounded on the way.

use aitk::betting::{run_capital, Martingale};
use aitk::cli::parse_sequence_spec;
use aitk::machine::{complexity_exact, make_table_machine, PrefixMachine};
use aitk::numerics::{format_decimal, format_rational, parse_rational, pow2_neg as core_pow2_neg};
use aitk::partition::{build_synthetic_domain, phase_table, write_phase_csv, z_approx, SyntheticDomainSpec};
use aitk::prediction::{
    check_predictability, check_run_bound as core_check_run_bound, compile_martingale_total,
    estimate_runlength_params as core_estimate, synth_runlength_fao, Prediction, PredictorFAO,
    RunBound, RunLengthEstimate, TotalPredictor,
};
use aitk::BitString;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn err(e: aitk::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn bits(s: &str) -> PyResult<BitString> {
    if s.is_empty() {
        Ok(BitString::empty())
    } else {
        s.parse().map_err(err)
    }
}

fn rat(s: &str) -> PyResult<aitk::Rational> {
    parse_rational(s).map_err(err)
}

/// Certified bracket `(lo, hi)` of `2^(-length/t)` of width at most `2^-k`.
#[pyfunction]
fn pow2_neg(length: u64, t: &str, k: u32) -> PyResult<(String, String)> {
    let iv = core_pow2_neg(length, &rat(t)?, k).map_err(err)?;
    Ok((format_rational(iv.lo()), format_rational(iv.hi())))
}

/// Truncated decimal rendering of a `"num/den"` rational.
#[pyfunction]
fn to_decimal(q: &str, places: usize) -> PyResult<String> {
    Ok(format_decimal(&rat(q)?, places))
}

#[pyclass(name = "Machine", module = "aitk_py")]
struct PyMachine {
    inner: PrefixMachine,
}

#[pymethods]
impl PyMachine {
    /// Table machine from `(program, output)` pairs.
    #[staticmethod]
    fn table(pairs: Vec<(String, String)>) -> PyResult<Self> {
        let pairs = pairs
            .iter()
            .map(|(p, o)| Ok((bits(p)?, bits(o)?)))
            .collect::<PyResult<Vec<_>>>()?;
        Ok(Self {
            inner: make_table_machine(pairs).map_err(err)?,
        })
    }

    #[staticmethod]
    fn interpreter() -> Self {
        Self {
            inner: PrefixMachine::interpreter(),
        }
    }

    /// Synthetic domain with `floor(2^n / (2 n^2))` programs of each length `n <= max_len`.
    #[staticmethod]
    fn synthetic(max_len: u32) -> PyResult<Self> {
        let spec = SyntheticDomainSpec::half_inverse_square(max_len);
        Ok(Self {
            inner: build_synthetic_domain(&spec).map_err(err)?,
        })
    }

    #[staticmethod]
    fn from_snapshot(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: PrefixMachine::read_snapshot(text.as_bytes()).map_err(err)?,
        })
    }

    fn snapshot(&self) -> PyResult<String> {
        let mut buf = Vec::new();
        self.inner.write_snapshot(&mut buf).map_err(err)?;
        Ok(String::from_utf8(buf).expect("snapshots are ASCII"))
    }

    #[getter]
    fn kind(&self) -> &'static str {
        self.inner.kind().name()
    }

    #[getter]
    fn stage(&self) -> u64 {
        self.inner.stage()
    }

    #[getter]
    fn terms(&self) -> u64 {
        self.inner.terms()
    }

    fn step(&mut self, steps: u64) -> PyResult<()> {
        self.inner.step_enumeration(steps).map_err(err)
    }

    /// Halting pairs found so far, as `(program, output)`.
    fn pairs(&self) -> Vec<(String, String)> {
        self.inner
            .pairs()
            .map(|p| (p.program.to_string(), p.output.to_string()))
            .collect()
    }

    fn kraft_sum(&self) -> String {
        format_rational(&self.inner.kraft_sum())
    }

    fn omega_bounds(&self) -> (String, String) {
        let iv = self.inner.omega_bounds();
        (format_rational(iv.lo()), format_rational(iv.hi()))
    }

    #[pyo3(signature = (t, k = 64))]
    fn z_approx(&self, t: &str, k: u32) -> PyResult<(String, String)> {
        let z = z_approx(&self.inner, &rat(t)?, k).map_err(err)?;
        Ok((format_rational(z.value.lo()), format_rational(z.value.hi())))
    }

    /// Phase table as CSV text.
    #[pyo3(signature = (temps, k = 64, decimals = None))]
    fn phase_table(&self, temps: Vec<String>, k: u32, decimals: Option<usize>) -> PyResult<String> {
        let temps = temps.iter().map(|t| rat(t)).collect::<PyResult<Vec<_>>>()?;
        let rows = phase_table(&self.inner, &temps, k).map_err(err)?;
        let mut buf = Vec::new();
        write_phase_csv(&rows, decimals, &mut buf).map_err(err)?;
        Ok(String::from_utf8(buf).expect("CSV is ASCII"))
    }

    /// `(length, witness)` of the shortest program found, or `None`.
    #[pyo3(signature = (target, cap = 12, budget = 1000))]
    fn complexity(&self, target: &str, cap: usize, budget: u64) -> PyResult<Option<(usize, String)>> {
        let r = complexity_exact(&self.inner, &bits(target)?, cap, budget).map_err(err)?;
        Ok(r.h_value.zip(r.witness.map(|w| w.to_string())))
    }
}

#[pyclass(name = "Automaton", module = "aitk_py", skip_from_py_object)]
#[derive(Clone)]
struct PyAutomaton {
    inner: PredictorFAO,
}

#[pymethods]
impl PyAutomaton {
    /// Run-length automaton predicting a one after `run_len` zeros past position `skip`.
    #[staticmethod]
    fn runlength(skip: usize, run_len: usize) -> PyResult<Self> {
        Ok(Self {
            inner: synth_runlength_fao(skip, run_len).map_err(err)?,
        })
    }

    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: PredictorFAO::from_text(text).map_err(err)?,
        })
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    #[getter]
    fn states(&self) -> usize {
        self.inner.state_count()
    }

    /// `'0'`, `'1'` or `'N'`.
    fn run(&self, x: &str) -> PyResult<String> {
        Ok(self.inner.run(bits(x)?.as_slice()).to_string())
    }
}

fn predictor(spec: &Bound<'_, PyAny>) -> PyResult<TotalPredictor> {
    if let Ok(a) = spec.extract::<PyRef<'_, PyAutomaton>>() {
        return Ok(a.inner.clone().into_total());
    }
    let text: String = spec.extract()?;
    let p = match text.as_str() {
        "const-zero" => Prediction::Zero,
        "const-one" => Prediction::One,
        "suspend" => Prediction::Suspend,
        other => return Err(PyValueError::new_err(format!("unknown predictor {other:?}"))),
    };
    Ok(TotalPredictor::constant(p))
}

/// Run a predictor (an `Automaton` or `"const-zero"`, `"const-one"`,
/// `"suspend"`) along a sequence spec such as `"periodic:100"`.
#[pyfunction]
fn check_predictability_of<'py>(
    py: Python<'py>,
    predictor_spec: &Bound<'py, PyAny>,
    sequence: &str,
    horizon: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let f = predictor(predictor_spec)?;
    let mut x = parse_sequence_spec(sequence).map_err(err)?;
    let r = check_predictability(&f, &mut x, horizon).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("horizon", r.horizon)?;
    d.set_item("predictions", r.predictions_made)?;
    d.set_item("mispredictions", r.mispredictions.clone())?;
    d.set_item("suspensions", r.suspensions)?;
    d.set_item("undefined_at", r.undefined_at)?;
    Ok(d)
}

/// Capital `B(X|0), ..., B(X|horizon)` of the compiled martingale.
#[pyfunction]
fn capital_trace(predictor_spec: &Bound<'_, PyAny>, sequence: &str, horizon: usize) -> PyResult<Vec<String>> {
    let b = compile_martingale_total(predictor(predictor_spec)?);
    let mut x = parse_sequence_spec(sequence).map_err(err)?;
    let trace = run_capital(&b, &mut x, horizon).map_err(err)?;
    Ok(trace.values.iter().map(format_rational).collect())
}

/// Capital of the compiled martingale at a single string.
#[pyfunction]
fn capital_at(predictor_spec: &Bound<'_, PyAny>, x: &str) -> PyResult<String> {
    let b = compile_martingale_total(predictor(predictor_spec)?);
    let v = b.capital(bits(x)?.as_slice()).expect("total martingale");
    Ok(format_rational(&v))
}

/// `(m, L)` estimated from a sample, or `None` when the tail has no zero run.
#[pyfunction]
#[pyo3(signature = (x, tail_fraction = "1/2"))]
fn estimate_runlength_params(x: &str, tail_fraction: &str) -> PyResult<Option<(usize, usize)>> {
    match core_estimate(&bits(x)?, &rat(tail_fraction)?).map_err(err)? {
        RunLengthEstimate::Params { skip, run_len } => Ok(Some((skip, run_len))),
        RunLengthEstimate::NoZeros => Ok(None),
    }
}

/// `("violated", n)` or `("not-violated-up-to", horizon)`.
#[pyfunction]
fn check_run_bound(sequence: &str, d: usize, horizon: usize) -> PyResult<(&'static str, usize)> {
    let mut x = parse_sequence_spec(sequence).map_err(err)?;
    Ok(match core_check_run_bound(&mut x, d, horizon).map_err(err)? {
        RunBound::Violated(n) => ("violated", n),
        RunBound::NotViolatedUpTo(h) => ("not-violated-up-to", h),
    })
}

/// First `n` bits of a sequence spec.
#[pyfunction]
fn sequence_prefix(sequence: &str, n: usize) -> PyResult<String> {
    let mut x = parse_sequence_spec(sequence).map_err(err)?;
    Ok(x.prefix(n).map_err(err)?.to_string())
}

#[pymodule]
fn aitk_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMachine>()?;
    m.add_class::<PyAutomaton>()?;
    m.add_function(wrap_pyfunction!(pow2_neg, m)?)?;
    m.add_function(wrap_pyfunction!(to_decimal, m)?)?;
    m.add_function(wrap_pyfunction!(check_predictability_of, m)?)?;
    m.add_function(wrap_pyfunction!(capital_trace, m)?)?;
    m.add_function(wrap_pyfunction!(capital_at, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_runlength_params, m)?)?;
    m.add_function(wrap_pyfunction!(check_run_bound, m)?)?;
    m.add_function(wrap_pyfunction!(sequence_prefix, m)?)?;
    Ok(())
}

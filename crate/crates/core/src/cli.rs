//! Batch command line for the `aitk` binary.
//!
//! Every subcommand is deterministic: the same arguments give byte-identical
//! output. `aitk run FILE` reads the same arguments from a `key=value` config
//! file, one per line, with `command=<subcommand>` naming what to run.
//!
//! Exit codes: 0 on success, 1 when `predict` observed a misprediction, 2 for
//! malformed arguments, specs or failed validation, 3 for I/O failures.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::betting::{run_capital, succeeds_empirically, Observation};
use crate::binary::{BitSource, BitString};
use crate::error::{Error, Result};
use crate::machine::{complexity_exact, make_table_machine, PrefixMachine};
use crate::numerics::{format_rational, parse_rational, Rational};
use crate::partition::{build_synthetic_domain, phase_table, write_phase_csv, SyntheticDomainSpec};
use crate::prediction::{
    check_predictability, compile_martingale_total, estimate_runlength_params,
    synth_runlength_fao, Prediction, PredictorFAO, RunLengthEstimate, TotalPredictor,
};

#[derive(Parser, Debug)]
#[command(name = "aitk", version, about = "Prefix-free machines, partition sums, martingales and predictors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build or resume a machine, advance its enumeration and save a snapshot.
    MachineEnum(MachineEnumArgs),
    /// Certified partial sums of Z(T) at each temperature, as CSV.
    PhaseTable(PhaseTableArgs),
    /// Check a predictor against a sequence.
    Predict(PredictArgs),
    /// Capital trajectory of the martingale compiled from a predictor, as CSV.
    Martingale(MartingaleArgs),
    /// Bounded-search upper bound on program-size complexity.
    Complexity(ComplexityArgs),
    /// Run the command described by a key=value config file.
    Run { config: PathBuf },
}

#[derive(Args, Debug)]
struct MachineSource {
    /// Machine spec: `interpreter`, `synthetic:<max_len>`,
    /// `table:<prog>=<out>,...` or a path to a key=value spec file.
    #[arg(long)]
    machine: Option<String>,
    /// Snapshot file to load when no --machine is given.
    #[arg(long)]
    snapshot: Option<PathBuf>,
    /// Enumeration steps to run before doing anything else.
    #[arg(long, default_value_t = 0)]
    steps: u64,
}

#[derive(Args, Debug)]
struct MachineEnumArgs {
    #[command(flatten)]
    source: MachineSource,
    /// Where to write the summary; stdout by default.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PhaseTableArgs {
    #[command(flatten)]
    source: MachineSource,
    /// Comma-separated positive rationals.
    #[arg(long)]
    temps: String,
    #[arg(long, default_value_t = 64)]
    precision_bits: u32,
    /// Add truncated decimal columns with this many places.
    #[arg(long)]
    decimals: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PredictorArgs {
    /// `const-zero`, `const-one`, `suspend` or `fao=<path>`.
    #[arg(long)]
    predictor: Option<String>,
    /// Synthesize the run-length automaton with this many skipped positions.
    #[arg(long)]
    m: Option<usize>,
    /// Run length for the synthesized automaton.
    #[arg(long = "L")]
    run_len: Option<usize>,
    /// Estimate m and L from a sample of the sequence.
    #[arg(long)]
    estimate: bool,
    /// Sample length for --estimate; half the horizon by default.
    #[arg(long)]
    sample: Option<usize>,
    #[arg(long, default_value = "1/2")]
    tail_fraction: String,
}

#[derive(Args, Debug)]
struct SequenceArgs {
    /// `zeros`, `ones`, `rational:<p/q>`, `periodic:<cycle>`,
    /// `eventually-periodic:<prefix>:<cycle>` or `omega:<steps>`.
    #[arg(long)]
    sequence: String,
    #[arg(long)]
    horizon: usize,
}

#[derive(Args, Debug)]
struct PredictArgs {
    #[command(flatten)]
    predictor: PredictorArgs,
    #[command(flatten)]
    sequence: SequenceArgs,
    /// Per-position CSV destination.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also save the automaton used, as a transition table.
    #[arg(long)]
    save_fao: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct MartingaleArgs {
    #[command(flatten)]
    predictor: PredictorArgs,
    #[command(flatten)]
    sequence: SequenceArgs,
    /// Report the first position where capital reaches this value.
    #[arg(long)]
    threshold: Option<String>,
    /// CSV destination; stdout by default.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ComplexityArgs {
    #[command(flatten)]
    source: MachineSource,
    #[arg(long)]
    target: String,
    #[arg(long, default_value_t = 12)]
    cap: usize,
    /// Step budget per candidate program.
    #[arg(long, default_value_t = 1000)]
    budget: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parse `args` (including the program name) and run. Returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = write!(stderr, "{}", e.render());
            return code;
        }
    };
    match dispatch(cli.command, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            match e {
                Error::Io(_) => 3,
                _ => 2,
            }
        }
    }
}

fn dispatch(command: Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    match command {
        Command::MachineEnum(a) => cmd_machine_enum(a, stdout),
        Command::PhaseTable(a) => cmd_phase_table(a, stdout),
        Command::Predict(a) => cmd_predict(a, stdout),
        Command::Martingale(a) => cmd_martingale(a, stdout, stderr),
        Command::Complexity(a) => cmd_complexity(a, stdout),
        Command::Run { config } => {
            let argv = config_to_args(&std::fs::read_to_string(&config)?)?;
            let mut full = vec!["aitk".to_string()];
            full.extend(argv);
            Ok(run(full, stdout, stderr))
        }
    }
}

/// Translate config lines into arguments. `key=value` becomes `--key value`,
/// `key=true` becomes a bare `--key` and `key=false` is dropped.
pub fn config_to_args(text: &str) -> Result<Vec<String>> {
    let mut command = None;
    let mut rest = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(i + 1, format!("expected key=value, got {raw:?}")))?;
        let (key, value) = (key.trim(), value.trim());
        if key == "command" {
            command = Some(value.to_string());
            continue;
        }
        match value {
            "true" => rest.push(format!("--{key}")),
            "false" => {}
            _ => {
                rest.push(format!("--{key}"));
                rest.push(value.to_string());
            }
        }
    }
    let command = command.ok_or_else(|| Error::invalid("config has no command= line"))?;
    let mut argv = vec![command];
    argv.extend(rest);
    Ok(argv)
}

fn open_out(path: &Option<PathBuf>, stdout: &mut dyn Write, body: &[u8]) -> Result<()> {
    match path {
        Some(p) => {
            let mut f = BufWriter::new(File::create(p)?);
            f.write_all(body)?;
            f.flush()?;
        }
        None => stdout.write_all(body)?,
    }
    Ok(())
}

fn load_machine(source: &MachineSource) -> Result<PrefixMachine> {
    let mut m = match (&source.machine, &source.snapshot) {
        (Some(spec), _) => parse_machine_spec(spec)?,
        (None, Some(path)) => PrefixMachine::read_snapshot(BufReader::new(File::open(path)?))?,
        (None, None) => return Err(Error::invalid("need --machine or --snapshot")),
    };
    m.step_enumeration(source.steps)?;
    Ok(m)
}

/// Inline machine spec, or a path to a spec file.
pub fn parse_machine_spec(spec: &str) -> Result<PrefixMachine> {
    if spec == "interpreter" {
        return Ok(PrefixMachine::interpreter());
    }
    if let Some(max_len) = spec.strip_prefix("synthetic:") {
        let max_len = max_len
            .parse()
            .map_err(|_| Error::invalid(format!("bad synthetic max_len {max_len:?}")))?;
        return build_synthetic_domain(&SyntheticDomainSpec::half_inverse_square(max_len));
    }
    if let Some(pairs) = spec.strip_prefix("table:") {
        let pairs = pairs
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|item| {
                let (p, o) = item
                    .split_once('=')
                    .ok_or_else(|| Error::invalid(format!("table entry {item:?} is not prog=out")))?;
                Ok((p.parse()?, o.parse()?))
            })
            .collect::<Result<Vec<_>>>()?;
        return make_table_machine(pairs);
    }
    let path = Path::new(spec);
    if !path.exists() {
        return Err(Error::invalid(format!("unknown machine spec {spec:?}")));
    }
    parse_machine_file(&std::fs::read_to_string(path)?)
}

/// Spec file: `kind=table|interpreter|synthetic`; tables list `pair=prog:out`
/// lines, synthetic domains give `count_rule`, `max_len` and `counts`.
pub fn parse_machine_file(text: &str) -> Result<PrefixMachine> {
    let mut fields = BTreeMap::new();
    let mut pairs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(i + 1, format!("expected key=value, got {raw:?}")))?;
        let (key, value) = (key.trim(), value.trim());
        if key == "pair" {
            let (p, o) = value
                .split_once(':')
                .ok_or_else(|| Error::parse(i + 1, "pair must be prog:out"))?;
            let p: BitString = p.parse().map_err(|e: Error| Error::parse(i + 1, e.to_string()))?;
            let o: BitString = o.parse().map_err(|e: Error| Error::parse(i + 1, e.to_string()))?;
            pairs.push((p, o));
        } else {
            fields.insert(key.to_string(), value.to_string());
        }
    }
    match fields.get("kind").map(String::as_str) {
        Some("table") => make_table_machine(pairs),
        Some("interpreter") => Ok(PrefixMachine::interpreter()),
        Some("synthetic") => build_synthetic_domain(&SyntheticDomainSpec::from_pairs(&fields)?),
        Some(other) => Err(Error::invalid(format!("unknown machine kind {other:?}"))),
        None => Err(Error::invalid("machine spec has no kind= line")),
    }
}

pub fn parse_sequence_spec(spec: &str) -> Result<BitSource> {
    let (kind, rest) = spec.split_once(':').unwrap_or((spec, ""));
    match kind {
        "zeros" => Ok(BitSource::zeros()),
        "ones" => Ok(BitSource::ones()),
        "rational" => BitSource::rational(&parse_rational(rest)?),
        "periodic" => BitSource::periodic(rest.parse()?),
        "eventually-periodic" => {
            let (prefix, cycle) = rest
                .split_once(':')
                .ok_or_else(|| Error::invalid("eventually-periodic needs <prefix>:<cycle>"))?;
            BitSource::eventually_periodic(prefix.parse()?, cycle.parse()?)
        }
        "omega" => {
            let steps = rest
                .parse()
                .map_err(|_| Error::invalid(format!("bad step count {rest:?}")))?;
            let mut m = PrefixMachine::interpreter();
            m.step_enumeration(steps)?;
            BitSource::enumeration_backed(m.omega_bounds())
        }
        _ => Err(Error::invalid(format!("unknown sequence spec {spec:?}"))),
    }
}

struct ResolvedPredictor {
    predictor: TotalPredictor,
    automaton: Option<PredictorFAO>,
    notes: Vec<String>,
}

fn resolve_predictor(a: &PredictorArgs, seq: &SequenceArgs) -> Result<ResolvedPredictor> {
    let chosen = [a.predictor.is_some(), a.m.is_some() || a.run_len.is_some(), a.estimate]
        .iter()
        .filter(|&&b| b)
        .count();
    if chosen != 1 {
        return Err(Error::invalid(
            "give exactly one of --predictor, --m/--L or --estimate",
        ));
    }
    let from_automaton = |fao: PredictorFAO, notes| ResolvedPredictor {
        predictor: fao.clone().into_total(),
        automaton: Some(fao),
        notes,
    };
    if let Some(spec) = &a.predictor {
        let constant = |p| ResolvedPredictor {
            predictor: TotalPredictor::constant(p),
            automaton: None,
            notes: vec![format!("predictor={spec}")],
        };
        return match spec.as_str() {
            "const-zero" => Ok(constant(Prediction::Zero)),
            "const-one" => Ok(constant(Prediction::One)),
            "suspend" => Ok(constant(Prediction::Suspend)),
            _ => match spec.strip_prefix("fao=") {
                Some(path) => {
                    let fao = PredictorFAO::from_text(&std::fs::read_to_string(path)?)?;
                    Ok(from_automaton(fao, vec![format!("predictor={spec}")]))
                }
                None => Err(Error::invalid(format!("unknown predictor spec {spec:?}"))),
            },
        };
    }
    if !a.estimate {
        let skip = a.m.unwrap_or(0);
        let run_len = a.run_len.ok_or_else(|| Error::invalid("--m needs --L"))?;
        let fao = synth_runlength_fao(skip, run_len)?;
        return Ok(from_automaton(fao, vec![format!("m={skip}"), format!("L={run_len}")]));
    }
    let sample_len = a.sample.unwrap_or(seq.horizon / 2).max(1);
    let sample = parse_sequence_spec(&seq.sequence)?.prefix(sample_len)?;
    let tail = parse_rational(&a.tail_fraction)?;
    match estimate_runlength_params(&sample, &tail)? {
        RunLengthEstimate::Params { skip, run_len } => {
            let fao = synth_runlength_fao(skip, run_len)?;
            Ok(from_automaton(
                fao,
                vec![format!("sample={sample_len}"), format!("m={skip}"), format!("L={run_len}")],
            ))
        }
        RunLengthEstimate::NoZeros => Ok(ResolvedPredictor {
            predictor: TotalPredictor::constant(Prediction::Suspend),
            automaton: None,
            notes: vec![format!("sample={sample_len}"), "estimate=no-zeros".into()],
        }),
    }
}

fn cmd_machine_enum(a: MachineEnumArgs, stdout: &mut dyn Write) -> Result<i32> {
    let m = load_machine(&a.source)?;
    if let Some(path) = &a.source.snapshot {
        let mut f = BufWriter::new(File::create(path)?);
        m.write_snapshot(&mut f)?;
        f.flush()?;
    }
    let omega = m.omega_bounds();
    let summary = format!(
        "kind={}\nstage={}\nterms={}\nkraft_sum={}\nomega_lo={}\nomega_hi={}\n",
        m.kind(),
        m.stage(),
        m.terms(),
        format_rational(&m.kraft_sum()),
        format_rational(omega.lo()),
        format_rational(omega.hi()),
    );
    open_out(&a.out, stdout, summary.as_bytes())?;
    Ok(0)
}

fn cmd_phase_table(a: PhaseTableArgs, stdout: &mut dyn Write) -> Result<i32> {
    let temps = a
        .temps
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(parse_rational)
        .collect::<Result<Vec<Rational>>>()?;
    if temps.is_empty() {
        return Err(Error::invalid("--temps is empty"));
    }
    let m = load_machine(&a.source)?;
    let rows = phase_table(&m, &temps, a.precision_bits)?;
    let mut buf = Vec::new();
    write_phase_csv(&rows, a.decimals, &mut buf)?;
    open_out(&a.out, stdout, &buf)?;
    Ok(0)
}

fn cmd_predict(a: PredictArgs, stdout: &mut dyn Write) -> Result<i32> {
    let resolved = resolve_predictor(&a.predictor, &a.sequence)?;
    let mut x = parse_sequence_spec(&a.sequence.sequence)?;
    let report = check_predictability(&resolved.predictor, &mut x, a.sequence.horizon)?;
    if let (Some(path), Some(fao)) = (&a.save_fao, &resolved.automaton) {
        std::fs::write(path, fao.to_text())?;
    }
    if let Some(path) = &a.out {
        let mut f = BufWriter::new(File::create(path)?);
        report.write_csv(&mut f)?;
        f.flush()?;
    }
    for note in &resolved.notes {
        writeln!(stdout, "{note}")?;
    }
    write!(stdout, "{report}")?;
    if a.predictor.estimate {
        let held_out = a.predictor.sample.unwrap_or(a.sequence.horizon / 2).max(1);
        let late = report.mispredictions.iter().filter(|&&n| n >= held_out).count();
        writeln!(stdout, "held_out_errors={late}")?;
    }
    Ok(if report.mispredictions.is_empty() { 0 } else { 1 })
}

fn cmd_martingale(a: MartingaleArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    let resolved = resolve_predictor(&a.predictor, &a.sequence)?;
    let b = compile_martingale_total(resolved.predictor);
    let mut x = parse_sequence_spec(&a.sequence.sequence)?;
    let trace = run_capital(&b, &mut x, a.sequence.horizon)?;
    let mut buf = Vec::new();
    trace.write_csv(&mut buf)?;
    open_out(&a.out, stdout, &buf)?;
    // Keep stdout pure CSV when it carries the trace.
    let summary: &mut dyn Write = if a.out.is_some() { stdout } else { stderr };
    let last = trace.values.last().expect("capital at the empty prefix");
    writeln!(summary, "final_capital={}", format_rational(last))?;
    if let Some(t) = &a.threshold {
        let threshold = parse_rational(t)?;
        let mut x = parse_sequence_spec(&a.sequence.sequence)?;
        match succeeds_empirically(&b, &mut x, &threshold, a.sequence.horizon)? {
            Observation::Reached(n) => writeln!(summary, "threshold_reached_at={n}")?,
            Observation::NotReached => writeln!(summary, "threshold_reached_at=none")?,
        }
    }
    Ok(0)
}

fn cmd_complexity(a: ComplexityArgs, stdout: &mut dyn Write) -> Result<i32> {
    let m = load_machine(&a.source)?;
    let target: BitString = a.target.parse()?;
    let r = complexity_exact(&m, &target, a.cap, a.budget)?;
    let show = |x: &BitString| if x.is_empty() { "λ".to_string() } else { x.to_string() };
    let mut text = format!("target={}\nsearch_cap={}\nbudget={}\n", show(&r.target), r.search_cap, a.budget);
    match (&r.h_value, &r.witness) {
        (Some(h), Some(w)) => text.push_str(&format!("h_upper_bound={h}\nwitness={}\n", show(w))),
        _ => text.push_str("h_upper_bound=none\nwitness=none\n"),
    }
    open_out(&a.out, stdout, text.as_bytes())?;
    Ok(0)
}

//! Prefix-free machines and their dovetailed enumeration.
//!
//! Three kinds of machine are provided:
//!
//! * table machines: a finite, explicitly listed set of halting pairs;
//! * the interpreter: a small self-delimiting stack language (see [`interpreter`]);
//! * synthetic domains: canonical prefix codes with prescribed length counts,
//!   built by [`crate::partition::build_synthetic_domain`].
//!
//! Every machine keeps its enumerated programs in a binary trie so that a
//! prefix-freeness violation is caught at the moment it would be introduced.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::{BufRead, Write};

use num_bigint::BigInt;
use num_integer::Roots;
use num_traits::Zero;

use crate::binary::BitString;
use crate::error::{Error, Result};
use crate::numerics::{pow2_inv, Rational, RationalInterval};
use crate::partition::{build_synthetic_domain, SyntheticDomainSpec};

/// Programs longer than this are never exhausted by [`complexity_exact`].
pub const MAX_SEARCH_CAP: usize = 24;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HaltingPair {
    pub program: BitString,
    pub output: BitString,
    /// Dovetail stage at which halting was observed.
    pub discovered_stage: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MachineKind {
    Table,
    Interpreter,
    Synthetic,
}

impl MachineKind {
    pub fn name(self) -> &'static str {
        match self {
            MachineKind::Table => "table",
            MachineKind::Interpreter => "interpreter",
            MachineKind::Synthetic => "synthetic",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "table" => Ok(MachineKind::Table),
            "interpreter" => Ok(MachineKind::Interpreter),
            "synthetic" => Ok(MachineKind::Synthetic),
            other => Err(Error::invalid(format!("unknown machine kind {other:?}"))),
        }
    }
}

impl fmt::Display for MachineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

const NO_CHILD: u32 = u32::MAX;

/// Binary trie over enumerated programs.
#[derive(Clone, Debug)]
struct PrefixTrie {
    children: Vec<[u32; 2]>,
    terminal: Vec<bool>,
}

impl PrefixTrie {
    fn new() -> Self {
        Self {
            children: vec![[NO_CHILD; 2]],
            terminal: vec![false],
        }
    }

    /// Insert `program`, or report the already present program that it
    /// extends or is extended by.
    fn insert(&mut self, program: &BitString) -> std::result::Result<(), BitString> {
        let mut node = 0usize;
        let mut path = Vec::with_capacity(program.len());
        for b in program.iter() {
            if self.terminal[node] {
                return Err(BitString::from_bits(path));
            }
            path.push(b);
            let slot = self.children[node][b as usize];
            node = if slot == NO_CHILD {
                let fresh = self.children.len();
                self.children.push([NO_CHILD; 2]);
                self.terminal.push(false);
                self.children[node][b as usize] = fresh as u32;
                fresh
            } else {
                slot as usize
            };
        }
        if self.terminal[node] || self.children[node] != [NO_CHILD; 2] {
            return Err(self.any_terminal_below(node, path));
        }
        self.terminal[node] = true;
        Ok(())
    }

    fn any_terminal_below(&self, mut node: usize, mut path: Vec<bool>) -> BitString {
        while !self.terminal[node] {
            let [zero, one] = self.children[node];
            let (bit, next) = if zero != NO_CHILD { (false, zero) } else { (true, one) };
            path.push(bit);
            node = next as usize;
        }
        BitString::from_bits(path)
    }
}

/// Canonical prefix code with `count` consecutive codewords of each length,
/// stored as blocks rather than materialised strings.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SyntheticLayout {
    pub spec: SyntheticDomainSpec,
    pub blocks: Vec<CodeBlock>,
}

/// Codewords `first, first+1, ..., first+count-1`, each `len` bits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CodeBlock {
    pub len: u32,
    pub first: u128,
    pub count: u64,
}

impl SyntheticLayout {
    fn contains(&self, program: &BitString) -> bool {
        let len = program.len() as u32;
        self.blocks.iter().any(|b| {
            b.len == len && {
                let v = program.iter().fold(0u128, |acc, bit| (acc << 1) | bit as u128);
                v >= b.first && v - b.first < b.count as u128
            }
        })
    }

    fn programs(&self) -> impl Iterator<Item = BitString> + '_ {
        self.blocks.iter().flat_map(|b| {
            (0..b.count).map(move |i| BitString::from_value(b.first + i as u128, b.len as usize))
        })
    }
}

/// The small self-delimiting interpreter.
///
/// A program is `1^k 0 w` with `|w| = k`, so the header fixes the length and
/// the domain is prefix-free. The payload `w` is read as 2-bit opcodes
/// (`00` push0, `01` push1, `10` emit, `11` halt); an odd trailing bit is
/// ignored. `emit` pops the stack top onto the output and is a no-op on an
/// empty stack. Falling off the end of the payload wraps to its start with the
/// stack kept, so a payload without a halt opcode never halts.
pub mod interpreter {
    use crate::binary::BitString;

    #[derive(Clone, Copy, Debug, PartialEq, Eq)]
    pub enum Op {
        Push0,
        Push1,
        Emit,
        Halt,
    }

    #[derive(Clone, Debug, PartialEq, Eq)]
    pub enum Outcome {
        Halted { output: BitString, steps: u64 },
        /// A full pass over the payload completed without halting.
        Diverges,
        /// Budget exhausted before either of the above.
        Running,
    }

    pub fn decode_ops(payload: &[bool]) -> Vec<Op> {
        payload
            .chunks_exact(2)
            .map(|c| match (c[0], c[1]) {
                (false, false) => Op::Push0,
                (false, true) => Op::Push1,
                (true, false) => Op::Emit,
                (true, true) => Op::Halt,
            })
            .collect()
    }

    /// Payload of `program` if it is exactly one well-formed program.
    pub fn payload(program: &[bool]) -> Option<&[bool]> {
        let k = program.iter().take_while(|&&b| b).count();
        (program.len() == 2 * k + 1).then(|| &program[k + 1..])
    }

    /// The `index`-th program in length-lexicographic order; the payload of
    /// program `i` is the `i`-th string.
    pub fn program_at(index: u64) -> BitString {
        let payload = BitString::from_index(index);
        let mut p = BitString::ones(payload.len());
        p.push(false);
        p.extend_from(&payload);
        p
    }

    pub fn program_index(program: &[bool]) -> Option<u64> {
        let w = payload(program)?;
        if w.len() >= 63 {
            return None;
        }
        let v = w.iter().fold(1u64, |acc, &b| (acc << 1) | b as u64);
        Some(v - 1)
    }

    /// Number of opcodes in the program at `index` (payload length over two).
    pub fn op_count(index: u64) -> u64 {
        (BitString::from_index(index).len() / 2) as u64
    }

    /// Run for at most `budget` instructions.
    pub fn simulate(payload: &[bool], budget: u64) -> Outcome {
        let ops = decode_ops(payload);
        let mut stack = Vec::new();
        let mut output = BitString::empty();
        let mut steps = 0u64;
        if ops.is_empty() {
            return Outcome::Diverges;
        }
        let mut ip = 0usize;
        while steps < budget {
            steps += 1;
            match ops[ip] {
                Op::Push0 => stack.push(false),
                Op::Push1 => stack.push(true),
                Op::Emit => {
                    if let Some(b) = stack.pop() {
                        output.push(b);
                    }
                }
                Op::Halt => return Outcome::Halted { output, steps },
            }
            ip += 1;
            if ip == ops.len() {
                return Outcome::Diverges;
            }
        }
        Outcome::Running
    }

    /// The program's halting time, if it halts at all.
    pub fn halting_time(payload: &[bool]) -> Option<u64> {
        let ops = decode_ops(payload);
        ops.iter()
            .position(|&op| op == Op::Halt)
            .map(|i| i as u64 + 1)
    }
}

/// Cantor pairing of (program index, step budget).
pub fn dovetail_pair(program: u64, steps: u64) -> u64 {
    let w = program + steps;
    w * (w + 1) / 2 + steps
}

pub fn dovetail_unpair(stage: u64) -> (u64, u64) {
    let w = ((8 * stage + 1).sqrt() - 1) / 2;
    let steps = stage - w * (w + 1) / 2;
    (w - steps, steps)
}

/// A prefix-free machine together with the halting pairs enumerated so far.
#[derive(Clone, Debug)]
pub struct PrefixMachine {
    kind: MachineKind,
    pairs: Vec<HaltingPair>,
    trie: PrefixTrie,
    lookup: HashMap<BitString, usize>,
    found: HashSet<u64>,
    histogram: BTreeMap<usize, u64>,
    stage: u64,
    synthetic: Option<SyntheticLayout>,
}

impl PrefixMachine {
    fn blank(kind: MachineKind) -> Self {
        Self {
            kind,
            pairs: Vec::new(),
            trie: PrefixTrie::new(),
            lookup: HashMap::new(),
            found: HashSet::new(),
            histogram: BTreeMap::new(),
            stage: 0,
            synthetic: None,
        }
    }

    /// The interpreter machine at stage 0.
    pub fn interpreter() -> Self {
        Self::blank(MachineKind::Interpreter)
    }

    pub(crate) fn from_synthetic(layout: SyntheticLayout) -> Self {
        let mut m = Self::blank(MachineKind::Synthetic);
        for b in &layout.blocks {
            *m.histogram.entry(b.len as usize).or_default() += b.count;
        }
        m.stage = layout.blocks.iter().map(|b| b.count).sum();
        m.synthetic = Some(layout);
        m
    }

    pub fn kind(&self) -> MachineKind {
        self.kind
    }

    pub fn stage(&self) -> u64 {
        self.stage
    }

    /// Number of enumerated programs.
    pub fn terms(&self) -> u64 {
        self.histogram.values().sum()
    }

    /// Enumerated program count per program length.
    pub fn length_histogram(&self) -> &BTreeMap<usize, u64> {
        &self.histogram
    }

    pub fn synthetic_layout(&self) -> Option<&SyntheticLayout> {
        self.synthetic.as_ref()
    }

    /// Enumerated halting pairs in discovery order.
    pub fn pairs(&self) -> Box<dyn Iterator<Item = HaltingPair> + '_> {
        match &self.synthetic {
            Some(layout) => Box::new(layout.programs().enumerate().map(|(i, program)| {
                HaltingPair {
                    program,
                    output: BitString::empty(),
                    discovered_stage: i as u64,
                }
            })),
            None => Box::new(self.pairs.iter().cloned()),
        }
    }

    fn record(&mut self, pair: HaltingPair) -> Result<()> {
        if let Err(existing) = self.trie.insert(&pair.program) {
            return Err(Error::PrefixViolation {
                existing,
                offending: pair.program,
            });
        }
        *self.histogram.entry(pair.program.len()).or_default() += 1;
        self.lookup.insert(pair.program.clone(), self.pairs.len());
        self.pairs.push(pair);
        Ok(())
    }

    /// Advance the dovetail schedule by `steps` stages. Stage `s` simulates
    /// program `i` for `t` instructions where `s = dovetail_pair(i, t)`.
    /// Table and synthetic machines are complete at construction, so this is
    /// a no-op for them.
    pub fn step_enumeration(&mut self, steps: u64) -> Result<()> {
        if self.kind != MachineKind::Interpreter {
            return Ok(());
        }
        for _ in 0..steps {
            let (index, budget) = dovetail_unpair(self.stage);
            if !self.found.contains(&index) {
                let program = interpreter::program_at(index);
                let payload = interpreter::payload(program.as_slice()).expect("well-formed");
                if let interpreter::Outcome::Halted { output, .. } =
                    interpreter::simulate(payload, budget)
                {
                    self.found.insert(index);
                    self.record(HaltingPair {
                        program,
                        output,
                        discovered_stage: self.stage,
                    })?;
                }
            }
            self.stage += 1;
        }
        Ok(())
    }

    /// Run `program` for at most `budget` steps. Table and synthetic programs
    /// halt immediately.
    pub fn run(&self, program: &BitString, budget: u64) -> Option<BitString> {
        match self.kind {
            MachineKind::Table => self
                .lookup
                .get(program)
                .map(|&i| self.pairs[i].output.clone()),
            MachineKind::Synthetic => self
                .synthetic
                .as_ref()
                .filter(|layout| layout.contains(program))
                .map(|_| BitString::empty()),
            MachineKind::Interpreter => {
                let payload = interpreter::payload(program.as_slice())?;
                match interpreter::simulate(payload, budget) {
                    interpreter::Outcome::Halted { output, .. } => Some(output),
                    _ => None,
                }
            }
        }
    }

    /// Exact `sum 2^-|p|` over the enumerated programs.
    pub fn kraft_sum(&self) -> Rational {
        self.histogram
            .iter()
            .fold(Rational::zero(), |acc, (&len, &count)| {
                acc + pow2_inv(len as u64) * Rational::from_integer(BigInt::from(count))
            })
    }

    /// Certified bounds on the halting probability of this machine.
    ///
    /// Table and synthetic machines are fully enumerated, so the bound is a
    /// point. For the interpreter the upper end adds the mass of every program
    /// that has neither halted nor completed a full pass over its payload
    /// within the steps the schedule has granted it so far.
    pub fn omega_bounds(&self) -> RationalInterval {
        let lo = self.kraft_sum();
        if self.kind != MachineKind::Interpreter {
            return RationalInterval::point(lo);
        }
        let mut pending = Rational::zero();
        let touched = if self.stage == 0 {
            0
        } else {
            let (last_i, last_t) = dovetail_unpair(self.stage - 1);
            let diag = last_i + last_t;
            for i in 0..=diag {
                if self.found.contains(&i) {
                    continue;
                }
                let granted = if i >= last_i { diag - i } else { diag - 1 - i };
                let program = interpreter::program_at(i);
                let payload = interpreter::payload(program.as_slice()).expect("well-formed");
                let certified_divergent = interpreter::halting_time(payload).is_none()
                    && granted >= interpreter::op_count(i);
                if !certified_divergent {
                    pending += pow2_inv(program.len() as u64);
                }
            }
            diag + 1
        };
        pending += untouched_mass(touched);
        let hi = &lo + pending;
        RationalInterval::new(lo, hi).expect("pending mass is nonnegative")
    }

    pub fn write_snapshot(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "# aitk machine snapshot")?;
        writeln!(out, "kind={}", self.kind)?;
        writeln!(out, "stage={}", self.stage)?;
        if let Some(layout) = &self.synthetic {
            for (key, value) in layout.spec.to_pairs() {
                writeln!(out, "{key}={value}")?;
            }
        }
        for pair in self.pairs() {
            writeln!(out, "{}\t{}", pair.program, pair.output)?;
        }
        Ok(())
    }

    /// Inverse of [`PrefixMachine::write_snapshot`]. Every listed pair is
    /// re-validated against the machine definition.
    pub fn read_snapshot(input: impl BufRead) -> Result<Self> {
        let mut header: BTreeMap<String, String> = BTreeMap::new();
        let mut listed: Vec<(usize, BitString, BitString)> = Vec::new();
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            let lineno = i + 1;
            if line.starts_with('#') || line.trim().is_empty() && !line.contains('\t') {
                continue;
            }
            if let Some((program, output)) = line.split_once('\t') {
                let program = program
                    .parse()
                    .map_err(|e: Error| Error::parse(lineno, e.to_string()))?;
                let output = output
                    .parse()
                    .map_err(|e: Error| Error::parse(lineno, e.to_string()))?;
                listed.push((lineno, program, output));
            } else if let Some((key, value)) = line.split_once('=') {
                if !listed.is_empty() {
                    return Err(Error::parse(lineno, "header line after halting pairs"));
                }
                header.insert(key.trim().to_string(), value.trim().to_string());
            } else {
                return Err(Error::parse(lineno, format!("unrecognised line {line:?}")));
            }
        }
        let kind = MachineKind::parse(
            header
                .get("kind")
                .ok_or_else(|| Error::parse(0, "snapshot missing kind"))?,
        )?;
        let stage: u64 = header
            .get("stage")
            .ok_or_else(|| Error::parse(0, "snapshot missing stage"))?
            .parse()
            .map_err(|_| Error::parse(0, "stage is not a natural number"))?;

        match kind {
            MachineKind::Table => {
                let m = make_table_machine(listed.into_iter().map(|(_, p, o)| (p, o)).collect())?;
                if m.stage != stage {
                    return Err(Error::parse(0, "table snapshot stage differs from pair count"));
                }
                Ok(m)
            }
            MachineKind::Synthetic => {
                let spec = SyntheticDomainSpec::from_pairs(&header)?;
                let m = build_synthetic_domain(&spec)?;
                if m.stage != stage || m.terms() != listed.len() as u64 {
                    return Err(Error::parse(0, "synthetic snapshot does not match its spec"));
                }
                for ((lineno, program, output), expected) in listed.iter().zip(m.pairs()) {
                    if program != &expected.program || output != &expected.output {
                        return Err(Error::parse(*lineno, "pair not produced by the synthetic spec"));
                    }
                }
                Ok(m)
            }
            MachineKind::Interpreter => {
                let mut restored = Vec::with_capacity(listed.len());
                for (lineno, program, output) in listed {
                    let index = interpreter::program_index(program.as_slice())
                        .ok_or_else(|| Error::parse(lineno, "not a well-formed program"))?;
                    let payload = interpreter::payload(program.as_slice()).expect("checked");
                    let halts_at = interpreter::halting_time(payload)
                        .ok_or_else(|| Error::parse(lineno, "program never halts"))?;
                    let discovered = dovetail_pair(index, halts_at);
                    if discovered >= stage {
                        return Err(Error::parse(lineno, "program cannot have halted by this stage"));
                    }
                    match interpreter::simulate(payload, halts_at) {
                        interpreter::Outcome::Halted { output: real, .. } if real == output => {}
                        _ => return Err(Error::parse(lineno, "output does not match the program")),
                    }
                    restored.push(HaltingPair {
                        program,
                        output,
                        discovered_stage: discovered,
                    });
                }
                restored.sort_by_key(|p| p.discovered_stage);
                let mut m = PrefixMachine::interpreter();
                for pair in restored {
                    let index = interpreter::program_index(pair.program.as_slice()).expect("checked");
                    if !m.found.insert(index) {
                        return Err(Error::parse(0, "duplicate program in snapshot"));
                    }
                    m.record(pair)?;
                }
                m.stage = stage;
                Ok(m)
            }
        }
    }
}

/// Total `2^-|p|` over interpreter programs with index `>= from`.
fn untouched_mass(from: u64) -> Rational {
    // Level k holds indices 2^k - 1 ..= 2^(k+1) - 2, each program 2k+1 bits long,
    // and all levels above k together weigh 2^-(k+1).
    let k = 63 - (from + 1).leading_zeros() as u64;
    let remaining_on_level = (1u64 << (k + 1)) - 1 - from;
    pow2_inv(2 * k + 1) * Rational::from_integer(BigInt::from(remaining_on_level)) + pow2_inv(k + 1)
}

/// A machine defined by an explicit prefix-free table of halting pairs.
pub fn make_table_machine(pairs: Vec<(BitString, BitString)>) -> Result<PrefixMachine> {
    let mut m = PrefixMachine::blank(MachineKind::Table);
    for (i, (program, output)) in pairs.into_iter().enumerate() {
        m.record(HaltingPair {
            program,
            output,
            discovered_stage: i as u64,
        })?;
    }
    m.stage = m.pairs.len() as u64;
    Ok(m)
}

pub fn kraft_sum(m: &PrefixMachine) -> Rational {
    m.kraft_sum()
}

/// Result of a bounded search for a shortest program.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComplexityReport {
    pub target: BitString,
    /// Shortest length found, `None` when nothing within the cap and budget
    /// produces the target. This is an upper bound on the true complexity.
    pub h_value: Option<usize>,
    pub witness: Option<BitString>,
    pub search_cap: usize,
}

/// Length of the shortest program of length `<= cap` that halts within
/// `budget` steps with output `x`; the witness is the first such program in
/// length-lexicographic order.
pub fn complexity_exact(
    m: &PrefixMachine,
    x: &BitString,
    cap: usize,
    budget: u64,
) -> Result<ComplexityReport> {
    if cap > MAX_SEARCH_CAP {
        return Err(Error::invalid(format!(
            "search cap {cap} exceeds {MAX_SEARCH_CAP}"
        )));
    }
    let witness = match m.kind {
        MachineKind::Table => m
            .pairs
            .iter()
            .filter(|p| p.program.len() <= cap && &p.output == x)
            .map(|p| &p.program)
            .min()
            .cloned(),
        MachineKind::Synthetic => m
            .synthetic
            .as_ref()
            .filter(|_| x.is_empty())
            .and_then(|layout| {
                layout
                    .blocks
                    .iter()
                    .filter(|b| b.len as usize <= cap && b.count > 0)
                    .min_by_key(|b| b.len)
                    .map(|b| BitString::from_value(b.first, b.len as usize))
            }),
        MachineKind::Interpreter => (0..=cap.saturating_sub(1) / 2)
            .filter(|k| 2 * k + 1 <= cap)
            .flat_map(BitString::all_of_len)
            .find_map(|payload| match interpreter::simulate(payload.as_slice(), budget) {
                interpreter::Outcome::Halted { output, .. } if &output == x => {
                    let mut p = BitString::ones(payload.len());
                    p.push(false);
                    p.extend_from(&payload);
                    Some(p)
                }
                _ => None,
            }),
    };
    Ok(ComplexityReport {
        target: x.clone(),
        h_value: witness.as_ref().map(BitString::len),
        witness,
        search_cap: cap,
    })
}

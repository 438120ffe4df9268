//! Certified partial sums of the partition function
//! `Z(T) = sum over halting p of 2^(-|p|/T)`, synthetic domains that exhibit
//! its divergence above `T = 1`, and phase tables across temperatures.

use std::collections::BTreeMap;
use std::io::Write;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::machine::{CodeBlock, MachineKind, PrefixMachine, SyntheticLayout};
use crate::numerics::{
    ceil_log2, format_decimal, format_rational, interval_add, pow2_neg, Rational,
    RationalInterval,
};

/// Longest codeword a synthetic domain may use.
pub const MAX_SYNTHETIC_LEN: u32 = 64;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartitionApprox {
    pub machine: MachineKind,
    pub temperature: Rational,
    pub stage: u64,
    /// Bracket of the partial sum over the enumerated programs. Its lower end
    /// is a lower bound on the full `Z(T)` of the machine.
    pub value: RationalInterval,
    pub terms: u64,
}

/// Partial sum of `Z(T)` over the currently enumerated programs, to total
/// width at most `2^-k`.
///
/// Each distinct length contributes `count * pow2_neg(len, t, k')` with
/// `k' = k + ceil(log2 terms) + 1`, so the widths add up to at most
/// `terms * 2^-k' <= 2^-(k+1)`.
pub fn z_approx(m: &PrefixMachine, t: &Rational, k: u32) -> Result<PartitionApprox> {
    if t <= &Rational::zero() {
        return Err(Error::invalid("temperature must be positive"));
    }
    let terms = m.terms();
    let per_term = k + ceil_log2(terms) + 1;
    let mut value = RationalInterval::zero();
    for (&len, &count) in m.length_histogram() {
        let term = pow2_neg(len as u64, t, per_term)?;
        value = interval_add(&value, &term.scale(count));
    }
    Ok(PartitionApprox {
        machine: m.kind(),
        temperature: t.clone(),
        stage: m.stage(),
        value,
        terms,
    })
}

/// How many strings of each length a synthetic domain holds.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CountRule {
    /// `floor(2^n / (2 n^2))` strings of length `n >= 1`. The Kraft sum stays
    /// below `pi^2/12` while `sum 2^(-n/T)` over the domain diverges for `T > 1`.
    HalfInverseSquare,
    /// Explicit `length -> count` table; absent lengths have count 0.
    Explicit(BTreeMap<u32, u64>),
}

impl CountRule {
    pub fn count(&self, n: u32) -> u64 {
        match self {
            CountRule::HalfInverseSquare => {
                if n == 0 {
                    0
                } else {
                    ((1u128 << n) / (2 * (n as u128) * (n as u128))) as u64
                }
            }
            CountRule::Explicit(table) => table.get(&n).copied().unwrap_or(0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SyntheticDomainSpec {
    pub count_rule: CountRule,
    pub max_len: u32,
}

impl SyntheticDomainSpec {
    pub fn half_inverse_square(max_len: u32) -> Self {
        Self {
            count_rule: CountRule::HalfInverseSquare,
            max_len,
        }
    }

    pub fn explicit(counts: impl IntoIterator<Item = (u32, u64)>, max_len: u32) -> Self {
        Self {
            count_rule: CountRule::Explicit(counts.into_iter().collect()),
            max_len,
        }
    }

    /// `key=value` form used in machine spec files and snapshot headers.
    pub fn to_pairs(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        match &self.count_rule {
            CountRule::HalfInverseSquare => out.push(("count_rule", "half-inverse-square".into())),
            CountRule::Explicit(table) => {
                out.push(("count_rule", "explicit".into()));
                let counts: Vec<String> = table.iter().map(|(n, c)| format!("{n}:{c}")).collect();
                out.push(("counts", counts.join(",")));
            }
        }
        out.push(("max_len", self.max_len.to_string()));
        out
    }

    pub fn from_pairs(pairs: &BTreeMap<String, String>) -> Result<Self> {
        let max_len = pairs
            .get("max_len")
            .ok_or_else(|| Error::invalid("synthetic spec needs max_len"))?
            .parse()
            .map_err(|_| Error::invalid("max_len must be a natural number"))?;
        let rule = pairs.get("count_rule").map(String::as_str);
        let count_rule = match rule {
            Some("half-inverse-square") => CountRule::HalfInverseSquare,
            Some("explicit") | Some("zero") => {
                let mut table = BTreeMap::new();
                if let Some(counts) = pairs.get("counts") {
                    for item in counts.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                        let (n, c) = item
                            .split_once(':')
                            .ok_or_else(|| Error::invalid(format!("bad count entry {item:?}")))?;
                        let n: u32 = n
                            .trim()
                            .parse()
                            .map_err(|_| Error::invalid(format!("bad length in {item:?}")))?;
                        let c: u64 = c
                            .trim()
                            .parse()
                            .map_err(|_| Error::invalid(format!("bad count in {item:?}")))?;
                        table.insert(n, c);
                    }
                }
                CountRule::Explicit(table)
            }
            Some(other) => return Err(Error::invalid(format!("unknown count_rule {other:?}"))),
            None => return Err(Error::invalid("synthetic spec needs count_rule")),
        };
        Ok(Self { count_rule, max_len })
    }
}

/// Realise the spec as a canonical prefix code: lengths are filled in
/// increasing order, each block taking the leftmost free codewords.
pub fn build_synthetic_domain(spec: &SyntheticDomainSpec) -> Result<PrefixMachine> {
    if spec.max_len > MAX_SYNTHETIC_LEN {
        return Err(Error::invalid(format!(
            "synthetic max_len {} exceeds {MAX_SYNTHETIC_LEN}",
            spec.max_len
        )));
    }
    let mut blocks = Vec::new();
    // Next free codeword at the current length; everything left of it is
    // covered by already chosen codewords.
    let mut next: u128 = 0;
    for n in 0..=spec.max_len {
        if n > 0 {
            next <<= 1;
        }
        let count = spec.count_rule.count(n);
        if count == 0 {
            continue;
        }
        let capacity = 1u128 << n;
        if next + count as u128 > capacity {
            return Err(Error::UnrealizableSpec { length: n });
        }
        blocks.push(CodeBlock {
            len: n,
            first: next,
            count,
        });
        next += count as u128;
    }
    Ok(PrefixMachine::from_synthetic(SyntheticLayout {
        spec: spec.clone(),
        blocks,
    }))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PhaseRow {
    pub temperature: Rational,
    pub stage: u64,
    pub terms: u64,
    pub lo: Rational,
    pub hi: Rational,
}

/// One row per temperature, all from the same snapshot of `m`.
pub fn phase_table(m: &PrefixMachine, temps: &[Rational], k: u32) -> Result<Vec<PhaseRow>> {
    if temps.is_empty() {
        return Err(Error::invalid("phase table needs at least one temperature"));
    }
    temps
        .iter()
        .map(|t| {
            let z = z_approx(m, t, k)?;
            Ok(PhaseRow {
                temperature: z.temperature,
                stage: z.stage,
                terms: z.terms,
                lo: z.value.lo().clone(),
                hi: z.value.hi().clone(),
            })
        })
        .collect()
}

/// CSV with header `T,stage,terms,lo,hi`. With `decimals`, truncated decimal
/// renderings of `lo` and `hi` follow in two extra columns.
pub fn write_phase_csv(rows: &[PhaseRow], decimals: Option<usize>, mut out: impl Write) -> Result<()> {
    match decimals {
        None => writeln!(out, "T,stage,terms,lo,hi")?,
        Some(_) => writeln!(out, "T,stage,terms,lo,hi,lo_decimal,hi_decimal")?,
    }
    for row in rows {
        write!(
            out,
            "{},{},{},{},{}",
            format_rational(&row.temperature),
            row.stage,
            row.terms,
            format_rational(&row.lo),
            format_rational(&row.hi)
        )?;
        if let Some(places) = decimals {
            write!(
                out,
                ",{},{}",
                format_decimal(&row.lo, places),
                format_decimal(&row.hi, places)
            )?;
        }
        writeln!(out)?;
    }
    Ok(())
}

//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.
//!
//! Every check compares library output against an oracle computed here from
//! first principles, never against the library's own helpers.

use std::collections::HashMap;
use std::process::Command;
use std::time::{Duration, Instant};

use aitk::betting::{check_fairness, Martingale};
use aitk::machine::{complexity_exact, make_table_machine};
use aitk::numerics::{interval_leq, pow2_neg, Rational, Tristate};
use aitk::partition::{build_synthetic_domain, z_approx, SyntheticDomainSpec};
use aitk::prediction::{
    check_predictability, compile_martingale_total, synth_runlength_fao, Prediction,
    TotalPredictor,
};
use aitk::{BitSource, BitString};
use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn pow2(e: usize) -> Rational {
    Rational::from_integer(BigInt::one() << e)
}

fn pow2_inv(e: usize) -> Rational {
    Rational::new(BigInt::one(), BigInt::one() << e)
}

fn random_prediction(rng: &mut impl Rng) -> Prediction {
    match rng.gen_range(0..3) {
        0 => Prediction::Zero,
        1 => Prediction::One,
        _ => Prediction::Suspend,
    }
}

/// Node index of `x` in a complete binary tree laid out by level.
fn node(x: &[bool]) -> usize {
    x.iter().fold(1usize, |acc, &b| 2 * acc + b as usize) - 1
}

/// A predictor given by a random table over all strings up to `depth`.
fn table_predictor(rng: &mut impl Rng, depth: usize) -> (TotalPredictor, Vec<Prediction>) {
    let table: Vec<Prediction> = (0..(1usize << (depth + 1)) - 1).map(|_| random_prediction(rng)).collect();
    let shared = table.clone();
    (TotalPredictor::new(move |x| shared[node(x)]), table)
}

/// splitmix64 finaliser.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A predictor defined on strings of every length by hashing them.
fn hashed_prediction(seed: u64, x: &[bool]) -> Prediction {
    let h = x
        .iter()
        .fold(mix(seed ^ x.len() as u64), |h, &b| mix(h ^ (b as u64 + 1)));
    match h % 3 {
        0 => Prediction::Zero,
        1 => Prediction::One,
        _ => Prediction::Suspend,
    }
}

/// Random prefix-free set: the leaves of a randomly grown binary trie, then a
/// random nonempty subset of them.
fn random_prefix_free(rng: &mut impl Rng, max_depth: usize, max_entries: usize) -> Vec<BitString> {
    let mut leaves = vec![BitString::empty()];
    let splits = rng.gen_range(1..=2 * max_entries);
    for _ in 0..splits {
        let splittable: Vec<usize> = (0..leaves.len()).filter(|&i| leaves[i].len() < max_depth).collect();
        if splittable.is_empty() {
            break;
        }
        let i = splittable[rng.gen_range(0..splittable.len())];
        let leaf = leaves.swap_remove(i);
        leaves.push(leaf.with(false));
        leaves.push(leaf.with(true));
    }
    let keep = rng.gen_range(1..=max_entries.min(leaves.len()));
    let mut chosen = Vec::new();
    while chosen.len() < keep {
        let i = rng.gen_range(0..leaves.len());
        chosen.push(leaves.swap_remove(i));
    }
    chosen
}

fn random_bits(rng: &mut impl Rng, max_len: usize) -> BitString {
    let len = rng.gen_range(0..=max_len);
    BitString::from_bits((0..len).map(|_| rng.gen()).collect())
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let depth = 10;
    for trial in 0..200 {
        let (f, table) = table_predictor(&mut rng, depth);
        let b = compile_martingale_total(f);
        let verdict = check_fairness(&b, depth).map_err(|e| e.to_string())?;
        ensure(verdict.passed(), || format!("predictor {trial}: {verdict:?}"))?;

        // Oracle: capital by the betting rule straight from the table, and
        // the averaging identity on every internal node.
        let mut capital = vec![Rational::one()];
        for x in BitString::all_up_to(depth).skip(1) {
            let parent = &x.as_slice()[..x.len() - 1];
            let bit = x.as_slice()[x.len() - 1];
            let c = &capital[node(parent)];
            let v = match table[node(parent)].bit() {
                None => c.clone(),
                Some(p) if p == bit => c * Rational::from_integer(2.into()),
                Some(_) => Rational::zero(),
            };
            capital.push(v);
        }
        for x in BitString::all_up_to(depth) {
            ensure(b.value(x.as_slice()) == capital[node(x.as_slice())], || {
                format!("predictor {trial}: capital differs at {x:?}")
            })?;
        }
        for x in BitString::all_up_to(depth - 1) {
            let sum = &capital[node(x.with(false).as_slice())] + &capital[node(x.with(true).as_slice())];
            ensure(sum == &capital[node(x.as_slice())] * Rational::from_integer(2.into()), || {
                format!("predictor {trial}: unfair at {x:?}")
            })?;
        }
    }
    Ok("200 predictors fair to depth 10".into())
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for trial in 0..100u64 {
        let seed: u64 = rng.gen();
        let f = TotalPredictor::new(move |x| hashed_prediction(seed, x));
        let b = compile_martingale_total(f);

        // Misprediction-free sequence: follow every committed prediction,
        // fill suspended positions with fresh random bits.
        let mut x = Vec::new();
        let mut predictions = vec![0usize];
        for _ in 0..64 {
            let bit = match hashed_prediction(seed, &x).bit() {
                Some(p) => {
                    predictions.push(predictions.last().unwrap() + 1);
                    p
                }
                None => {
                    predictions.push(*predictions.last().unwrap());
                    rng.gen()
                }
            };
            x.push(bit);
        }
        let trace = b.trace(&x);
        ensure(trace.len() == 65, || format!("pair {trial}: trace length {}", trace.len()))?;
        for n in 0..=64 {
            ensure(trace[n] == pow2(predictions[n]), || {
                format!("pair {trial}: B(X|{n}) = {} but 2^{} expected", trace[n], predictions[n])
            })?;
        }

        // Flip the bit after the first predicted position in the first 12
        // and watch capital vanish from there on.
        for j in 0..12 {
            if hashed_prediction(seed, &x[..j]).bit().is_none() {
                continue;
            }
            let mut y = x.clone();
            y[j] = !y[j];
            let trace = b.trace(&y);
            for n in 0..=64 {
                let expected = if n <= j { pow2(predictions[n]) } else { Rational::zero() };
                ensure(trace[n] == expected, || {
                    format!("pair {trial}: injected error at {j}, wrong capital at {n}")
                })?;
            }
        }
    }

    // Exhaustive over all strings of length <= 12 for a few predictors.
    for seed in 0..8u64 {
        let b = compile_martingale_total(TotalPredictor::new(move |x| hashed_prediction(seed, x)));
        for x in BitString::all_up_to(12) {
            let xs = x.as_slice();
            let mut count = 0;
            let mut wrong = false;
            for n in 0..xs.len() {
                if let Some(p) = hashed_prediction(seed, &xs[..n]).bit() {
                    count += 1;
                    wrong |= p != xs[n];
                }
            }
            let expected = if wrong { Rational::zero() } else { pow2(count) };
            ensure(b.value(xs) == expected, || format!("seed {seed}: wrong capital at {x:?}"))?;
        }
    }
    Ok("100 pairs to n = 64, exhaustive error injection to depth 12".into())
}

fn criterion_3() -> Outcome {
    let mut cases = 0;
    for skip in 0..=3 {
        for run_len in 1..=3 {
            let m = synth_runlength_fao(skip, run_len).map_err(|e| e.to_string())?;
            for x in BitString::all_up_to(12) {
                let xs = x.as_slice();
                let expected = xs.len() >= skip + run_len && xs[xs.len() - run_len..].iter().all(|&b| !b);
                let got = m.run(xs);
                ensure(got != Prediction::Zero, || format!("m={skip} L={run_len}: ZERO on {x:?}"))?;
                ensure((got == Prediction::One) == expected, || {
                    format!("m={skip} L={run_len}: {got} on {x:?}")
                })?;
                cases += 1;
            }
        }
    }
    ensure(cases == 4 * 3 * 8191, || format!("{cases} cases"))?;
    Ok(format!("{cases} cases"))
}

/// Bits with arbitrary prefix of length `skip`, then blocks `0^a 1` with
/// `a <= run_len`. Every `density`-th block has `a = run_len` exactly.
struct RunStructured {
    rng: ChaCha8Rng,
    skip: usize,
    run_len: usize,
    density: usize,
    emitted: usize,
    blocks: usize,
    pending: Vec<bool>,
}

impl RunStructured {
    fn new(seed: u64, skip: usize, run_len: usize, density: usize) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            skip,
            run_len,
            density,
            emitted: 0,
            blocks: 0,
            pending: Vec::new(),
        }
    }

    fn next_bit(&mut self) -> bool {
        if self.emitted < self.skip {
            self.emitted += 1;
            return self.rng.gen();
        }
        if self.pending.is_empty() {
            self.blocks += 1;
            let a = if self.blocks % self.density == 0 {
                self.run_len
            } else {
                self.rng.gen_range(0..=self.run_len)
            };
            self.pending = std::iter::once(true).chain(std::iter::repeat(false).take(a)).collect();
        }
        self.emitted += 1;
        self.pending.pop().expect("block nonempty")
    }

    /// Forced full-length blocks whose closing one lands before `horizon`.
    fn guaranteed_predictions(seed: u64, skip: usize, run_len: usize, density: usize, horizon: usize) -> usize {
        let mut g = Self::new(seed, skip, run_len, density);
        let mut count = 0;
        for n in 0..horizon {
            let was_forced = g.pending.len() == 1 && g.blocks % density == 0 && n >= skip;
            let bit = g.next_bit();
            if was_forced && bit {
                count += 1;
            }
        }
        count
    }
}

fn criterion_4() -> Outcome {
    let horizon = 10_000;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut total_predictions = 0;
    for trial in 0..1000 {
        let seed: u64 = rng.gen();
        let skip = rng.gen_range(0..50);
        let run_len = rng.gen_range(1..=8);
        let density = rng.gen_range(1..=10);
        let mut g = RunStructured::new(seed, skip, run_len, density);
        let mut x = BitSource::generator(move || g.next_bit());
        let fao = synth_runlength_fao(skip, run_len).map_err(|e| e.to_string())?;
        let report = check_predictability(&fao, &mut x, horizon).map_err(|e| e.to_string())?;

        let guaranteed = RunStructured::guaranteed_predictions(seed, skip, run_len, density, horizon);
        ensure(report.mispredictions.is_empty(), || {
            format!("trial {trial}: mispredictions at {:?}", &report.mispredictions[..1])
        })?;
        ensure(report.predictions_made >= guaranteed, || {
            format!("trial {trial}: {} predictions, {guaranteed} guaranteed", report.predictions_made)
        })?;
        ensure(guaranteed > 0, || format!("trial {trial}: generator guaranteed nothing"))?;

        // Oracle count: positions n with n >= skip + L whose last L bits are zero.
        let bits = x.prefix(horizon).map_err(|e| e.to_string())?;
        let bits = bits.as_slice();
        let expected = (skip + run_len..horizon)
            .filter(|&n| bits[n - run_len..n].iter().all(|&b| !b))
            .count();
        ensure(report.predictions_made == expected, || {
            format!("trial {trial}: {} predictions, oracle {expected}", report.predictions_made)
        })?;
        total_predictions += report.predictions_made;
    }
    Ok(format!("1000 sequences, {total_predictions} predictions, none wrong"))
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let temps: Vec<Rational> = (1..=4).map(|i| Rational::new(i.into(), 4.into())).collect();
    for trial in 0..50 {
        let programs = random_prefix_free(&mut rng, 12, 30);
        let oracle_kraft = programs.iter().fold(Rational::zero(), |acc, p| acc + pow2_inv(p.len()));
        let pairs = programs.iter().map(|p| (p.clone(), random_bits(&mut rng, 6))).collect();
        let m = make_table_machine(pairs).map_err(|e| e.to_string())?;

        ensure(m.kraft_sum() == oracle_kraft, || format!("machine {trial}: Kraft sum"))?;
        ensure(oracle_kraft <= Rational::one(), || format!("machine {trial}: Kraft sum above 1"))?;
        let z1 = z_approx(&m, &Rational::one(), 64).map_err(|e| e.to_string())?;
        ensure(z1.value.is_point() && z1.value.lo() == &oracle_kraft, || {
            format!("machine {trial}: Z(1) = {} but Kraft sum {}", z1.value, oracle_kraft)
        })?;
        let zs = temps
            .iter()
            .map(|t| z_approx(&m, t, 64).map(|z| z.value))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| e.to_string())?;
        for w in zs.windows(2) {
            ensure(interval_leq(&w[0], &w[1]) == Tristate::Yes, || {
                format!("machine {trial}: {} vs {} not certified", w[0], w[1])
            })?;
        }
    }
    Ok("50 machines, Z(1) exact, monotone over T = 1/4..1".into())
}

fn criterion_6() -> Outcome {
    let max_len = 30u32;
    let m = build_synthetic_domain(&SyntheticDomainSpec::half_inverse_square(max_len)).map_err(|e| e.to_string())?;

    // Oracle counts floor(2^n / (2 n^2)) and closed forms
    //   Z(1) = sum c_n 2^-n
    //   Z(2) = A + B / sqrt 2, A = sum_{n even} c_n 2^(-n/2), B = sum_{n odd} c_n 2^(-(n-1)/2).
    let counts: Vec<(usize, BigInt)> = (1..=max_len as usize)
        .map(|n| (n, (BigInt::one() << n) / BigInt::from(2 * n * n)))
        .collect();
    let total: BigInt = counts.iter().map(|(_, c)| c.clone()).sum();
    let z1_oracle = counts
        .iter()
        .fold(Rational::zero(), |acc, (n, c)| acc + Rational::from_integer(c.clone()) * pow2_inv(*n));
    let (mut a, mut b) = (Rational::zero(), Rational::zero());
    for (n, c) in &counts {
        let c = Rational::from_integer(c.clone());
        if n % 2 == 0 {
            a += c * pow2_inv(n / 2);
        } else {
            b += c * pow2_inv((n - 1) / 2);
        }
    }
    // a + b/sqrt2 compared against r, exactly.
    let sum_gt = |r: &Rational| -> bool {
        let d = r - &a;
        d < Rational::zero() || &b * &b > Rational::from_integer(2.into()) * &d * &d
    };
    let sum_ge = |r: &Rational| -> bool {
        let d = r - &a;
        d <= Rational::zero() || &b * &b >= Rational::from_integer(2.into()) * &d * &d
    };

    ensure(BigInt::from(m.terms()) == total, || format!("{} programs, oracle {total}", m.terms()))?;
    let z1 = z_approx(&m, &Rational::one(), 64).map_err(|e| e.to_string())?;
    ensure(z1.value.is_point() && z1.value.lo() == &z1_oracle, || "Z(1) differs from closed form".into())?;
    let bound = Rational::new(83.into(), 100.into());
    ensure(z1_oracle <= bound, || "Z(1) exceeds 83/100".into())?;

    let two = Rational::from_integer(2.into());
    let ten = Rational::from_integer(10.into());
    let z2 = z_approx(&m, &two, 64).map_err(|e| e.to_string())?;
    ensure(sum_gt(&ten), || "closed-form Z(2) does not exceed 10".into())?;
    ensure(z2.value.lo() > &ten, || format!("certified Z(2) lower end {} not above 10", z2.value.lo()))?;
    ensure(sum_ge(z2.value.lo()) && !sum_gt(z2.value.hi()), || {
        "closed-form Z(2) outside the certified bracket".into()
    })?;
    Ok(format!(
        "{total} programs, Z(1) = {:.4} <= 0.83, Z(2) >= {:.2} > 10",
        to_f64(&z1_oracle),
        to_f64(z2.value.lo())
    ))
}

fn to_f64(q: &Rational) -> f64 {
    use num_traits::ToPrimitive;
    q.to_f64().unwrap_or(f64::NAN)
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let cap = 12;
    let mut checked = 0;
    for trial in 0..40 {
        let programs = random_prefix_free(&mut rng, 14, 20);
        let pairs: Vec<(BitString, BitString)> =
            programs.iter().map(|p| (p.clone(), random_bits(&mut rng, 3))).collect();
        let lookup: HashMap<BitString, BitString> = pairs.iter().cloned().collect();
        let m = make_table_machine(pairs.clone()).map_err(|e| e.to_string())?;

        let mut targets: Vec<BitString> = pairs.iter().map(|(_, o)| o.clone()).collect();
        targets.extend((0..5).map(|_| random_bits(&mut rng, 4)));
        for x in targets {
            // Oracle: walk every candidate of length <= cap in length-lex order.
            let first = BitString::all_up_to(cap).find(|p| lookup.get(p) == Some(&x));
            let r = complexity_exact(&m, &x, cap, 1).map_err(|e| e.to_string())?;
            ensure(r.h_value == first.as_ref().map(BitString::len) && r.witness == first, || {
                format!("machine {trial}, target {x:?}: {:?} vs oracle {first:?}", r.witness)
            })?;
            checked += 1;
        }
    }
    Ok(format!("{checked} targets on 40 machines"))
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for trial in 0..500 {
        let len: u64 = rng.gen_range(0..=200);
        let t = Rational::new(rng.gen_range(1..=40).into(), rng.gen_range(1..=40).into());
        let k: u32 = rng.gen_range(1..=128);
        let iv = pow2_neg(len, &t, k).map_err(|e| e.to_string())?;
        ensure(iv.width() <= pow2_inv(k as usize), || format!("case {trial}: width too large"))?;

        // v = 2^(-len d / n) satisfies v^n = 2^(-len d); check
        // lo^n * 2^(len d) <= 1 <= hi^n * 2^(len d) over the integers.
        let n = t.numer().to_string().parse::<u32>().unwrap();
        let shift = (len * t.denom().to_string().parse::<u64>().unwrap()) as usize;
        let lo_ok = (iv.lo().numer().pow(n) << shift) <= iv.lo().denom().pow(n);
        let hi_ok = (iv.hi().numer().pow(n) << shift) >= iv.hi().denom().pow(n);
        ensure(lo_ok && hi_ok, || format!("case {trial}: bracket {iv} misses 2^(-{len}/{t})"))?;
    }
    Ok("500 random brackets".into())
}

fn criterion_9() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let configs = [
        (
            "enum",
            "command=machine-enum\nmachine=interpreter\nsteps=20000\nsnapshot={dir}/interp.snap\n",
            "interp.snap",
        ),
        (
            "phase",
            "command=phase-table\nmachine=synthetic:30\ntemps=1/2,1,3/2,2\ndecimals=6\nout={dir}/phase.csv\n",
            "phase.csv",
        ),
        (
            "predict",
            "command=predict\nm=0\nL=2\nsequence=periodic:100\nhorizon=999\nout={dir}/predict.csv\n",
            "predict.csv",
        ),
    ];
    let dir_str = dir.path().to_str().unwrap();
    for (name, template, artifact) in configs {
        let cfg = dir.path().join(format!("{name}.cfg"));
        std::fs::write(&cfg, template.replace("{dir}", dir_str)).map_err(|e| e.to_string())?;
        let mut runs = Vec::new();
        for _ in 0..3 {
            let out = Command::new(env!("CARGO_BIN_EXE_aitk"))
                .arg("run")
                .arg(&cfg)
                .output()
                .map_err(|e| e.to_string())?;
            ensure(out.status.success(), || {
                format!("{name}: exit {:?}, {}", out.status.code(), String::from_utf8_lossy(&out.stderr))
            })?;
            let file = std::fs::read(dir.path().join(artifact)).map_err(|e| e.to_string())?;
            runs.push((out.stdout, file));
        }
        ensure(runs.windows(2).all(|w| w[0] == w[1]), || format!("{name}: outputs differ"))?;
    }
    Ok("3 commands x 3 runs byte-identical".into())
}

fn main() {
    let criteria: [(u32, &str, Duration, fn() -> Outcome); 9] = [
        (1, "fairness of compiled martingales", Duration::from_secs(10), criterion_1),
        (2, "capital identity", Duration::from_secs(10), criterion_2),
        (3, "synthesizer characterization", Duration::from_secs(30), criterion_3),
        (4, "run-structure soundness", Duration::from_secs(60), criterion_4),
        (5, "partition identities", Duration::from_secs(10), criterion_5),
        (6, "phase transition", Duration::from_secs(30), criterion_6),
        (7, "bounded-search complexity", Duration::from_secs(30), criterion_7),
        (8, "precision contract", Duration::from_secs(10), criterion_8),
        (9, "CLI determinism", Duration::from_secs(60), criterion_9),
    ];
    let mut failed = 0;
    for (id, name, limit, check) in criteria {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let (status, detail) = match outcome {
            Ok(d) if elapsed <= limit => ("PASS", d),
            Ok(d) => ("FAIL", format!("{d}; over time limit")),
            Err(e) => ("FAIL", e),
        };
        if status == "FAIL" {
            failed += 1;
        }
        println!(
            "{status} criterion {id} ({name}): {detail} [{:.2}s, limit {}s]",
            elapsed.as_secs_f64(),
            limit.as_secs()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
    println!("all 9 criteria passed");
}

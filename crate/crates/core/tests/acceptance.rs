//! The acceptance suite: one pass/fail line per criterion.
//!
//! Every expected value is computed here from first principles (brute-force
//! scans, direct formula evaluation, independent replays) rather than taken
//! from the library's own bookkeeping. The target runs without the libtest
//! harness so the summary lines always print; it exits nonzero if any
//! criterion fails.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use num_bigint::{BigInt, BigUint};
use num_rational::Ratio;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use oracle_lab::adversary::parallel::construction::{ParAction, ParIteration};
use oracle_lab::adversary::parallel::{self as par, ParConfig, ParRecord, ParallelMachine};
use oracle_lab::adversary::pp::construction::{Action, PpIteration};
use oracle_lab::adversary::pp::progress::term_numerator;
use oracle_lab::adversary::pp::{
    self as pp, ns_search, AmplifyResult, EncodeMode, MachineFamily, MachineSpec, MultilinearPoly, PpConfig,
    PpRecord, ThresholdMachine,
};
use oracle_lab::adversary::subset::SubsetBudget;
use oracle_lab::adversary::{Cell, OracleTable};
use oracle_lab::circuit::{enumerate, Circuit, TruthTable};
use oracle_lab::count::{gap_decide, AffineHash, Verdict};
use oracle_lab::diag::build_hard_language;
use oracle_lab::harness::{run, verify_trace, Experiment};
use oracle_lab::learner::{
    is_minimal, learn_adaptive, learn_nplog, learn_parallel, minimize_blackbox, LearnInstance, LearnMode,
    LearnerOutput,
};

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).to_path_buf()
}

// ---------------------------------------------------------------------------
// learning instances

/// The first circuit computing each function, by one scan in enumeration
/// order. The order is size-major, so the first hit has least size and is the
/// lexicographically first circuit of that size.
fn first_circuits(n: usize, s_max: usize) -> BTreeMap<u64, Circuit> {
    let mut first = BTreeMap::new();
    for c in enumerate(n, s_max) {
        first.entry(c.truth_table().bits()).or_insert(c);
    }
    first
}

struct Instance {
    f: TruthTable,
    s: usize,
    want: Circuit,
}

struct LearnRuns {
    instances: Vec<Instance>,
    parallel: Vec<LearnerOutput>,
    nplog: Vec<LearnerOutput>,
    adaptive: Vec<LearnerOutput>,
    /// Wall time of the learners alone, excluding the oracle scans.
    elapsed: Duration,
}

fn n2_first() -> &'static BTreeMap<u64, Circuit> {
    static FIRST: OnceLock<BTreeMap<u64, Circuit>> = OnceLock::new();
    FIRST.get_or_init(|| first_circuits(2, 4))
}

fn learn_runs() -> &'static LearnRuns {
    static RUNS: OnceLock<LearnRuns> = OnceLock::new();
    RUNS.get_or_init(|| {
        let mut instances = Vec::new();
        let n2 = n2_first();
        assert_eq!(n2.len(), 16, "every 2-input function has a circuit of at most 4 gates");
        for (&bits, c) in n2 {
            instances.push(Instance { f: TruthTable::from_bits(2, bits), s: c.size(), want: c.clone() });
        }
        let n3 = first_circuits(3, 3);
        let keys: Vec<u64> = n3.keys().copied().collect();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for i in sample(&mut rng, keys.len(), 50).into_iter() {
            let c = &n3[&keys[i]];
            instances.push(Instance { f: TruthTable::from_bits(3, keys[i]), s: c.size(), want: c.clone() });
        }
        let start = Instant::now();
        let mut parallel = Vec::new();
        let mut nplog = Vec::new();
        let mut adaptive = Vec::new();
        for (i, inst) in instances.iter().enumerate() {
            let li = LearnInstance::new(inst.s, inst.f);
            parallel.push(learn_parallel(&li).expect("parallel learner"));
            nplog.push(learn_nplog(&li).expect("nplog learner"));
            let mut rng = ChaCha8Rng::seed_from_u64(i as u64);
            adaptive.push(learn_adaptive(&li, 5, &mut rng).expect("adaptive learner"));
        }
        LearnRuns { instances, parallel, nplog, adaptive, elapsed: start.elapsed() }
    })
}

fn criterion_1() -> Check {
    let runs = learn_runs();
    let mismatches: Vec<String> = runs
        .instances
        .iter()
        .zip(&runs.parallel)
        .filter(|(inst, out)| out.circuit != inst.want)
        .map(|(inst, out)| format!("f = {} (n = {}): got {}, want {}", inst.f.to_hex(), inst.f.n(), out.circuit, inst.want))
        .collect();
    ensure(mismatches.is_empty(), || format!("{} mismatches, first: {}", mismatches.len(), mismatches[0]))?;
    ensure(runs.elapsed <= Duration::from_secs(600), || format!("learners took {:?}", runs.elapsed))?;
    Ok(format!(
        "{} instances (16 at n = 2, 50 at n = 3), zero mismatches, learners ran in {:.1} s",
        runs.instances.len(),
        runs.elapsed.as_secs_f64()
    ))
}

/// Least `r` with `(3/2)^r >= total`.
fn halving_rounds(total: u64) -> u64 {
    let (mut three, mut two) = (1u128, total as u128);
    let mut r = 0;
    while three < two {
        three *= 3;
        two *= 2;
        r += 1;
    }
    r
}

fn criterion_2() -> Check {
    let runs = learn_runs();
    for (inst, out) in runs.instances.iter().zip(&runs.parallel) {
        ensure(out.ledger.batches == 1, || format!("f = {}: {} NP batches", inst.f.to_hex(), out.ledger.batches))?;
    }
    let mut totals: HashMap<(usize, usize), u64> = HashMap::new();
    let mut worst = (0, 1);
    for (inst, out) in runs.instances.iter().zip(&runs.adaptive) {
        let n = inst.f.n();
        let total = *totals.entry((n, inst.s)).or_insert_with(|| enumerate(n, inst.s).count() as u64);
        ensure(out.class_size == total, || format!("f = {}: class size {} vs {total}", inst.f.to_hex(), out.class_size))?;
        let bound = halving_rounds(total);
        ensure(out.rounds <= bound, || format!("f = {}: {} adaptive rounds, bound {bound}", inst.f.to_hex(), out.rounds))?;
        if out.rounds * worst.1 > worst.0 * bound {
            worst = (out.rounds, bound);
        }
    }
    Ok(format!("{} parallel runs with exactly 1 batch; adaptive rounds within bound (tightest {} of {})", runs.parallel.len(), worst.0, worst.1))
}

fn criterion_3() -> Check {
    let runs = learn_runs();
    for ((inst, a), b) in runs.instances.iter().zip(&runs.parallel).zip(&runs.nplog) {
        ensure(a.circuit == b.circuit, || format!("f = {}: nplog {} vs parallel {}", inst.f.to_hex(), b.circuit, a.circuit))?;
    }
    Ok(format!("{} instances bit-identical", runs.nplog.len()))
}

fn criterion_4() -> Check {
    let runs = learn_runs();
    let mut retries = 0;
    for (inst, out) in runs.instances.iter().zip(&runs.adaptive) {
        let got = TruthTable::from_fn(inst.f.n(), |x| out.circuit.eval_index(x));
        ensure(got == inst.f, || format!("f = {}: adaptive output computes {}", inst.f.to_hex(), got.to_hex()))?;
        retries += out.retries;
    }
    Ok(format!("{} exact outputs, {retries} verification retries in total", runs.adaptive.len()))
}

fn criterion_5() -> Check {
    let least: HashMap<u64, usize> = n2_first().iter().map(|(&b, c)| (b, c.size())).collect();
    let mut swept = 0;
    for c in enumerate(2, 2) {
        let bits = c.truth_table().bits();
        let min = least[&bits];
        let out = minimize_blackbox(&c, LearnMode::Parallel, 5, 0).map_err(|e| format!("{c}: {e}"))?;
        ensure(out.circuit.truth_table().bits() == bits, || format!("{c}: minimized circuit computes another function"))?;
        ensure(out.circuit.size() == min, || format!("{c}: minimized to size {}, least is {min}", out.circuit.size()))?;
        ensure(is_minimal(&c) == (c.size() == min), || format!("{c}: is_minimal disagrees with least size {min}"))?;
        swept += 1;
    }
    Ok(format!("{swept} circuits minimized to their least size, is_minimal agrees"))
}

// ---------------------------------------------------------------------------
// diagonalization

/// Replay the halving procedure on the enumerated class and check the stored
/// language against it.
fn check_diagonal(n: usize, s: usize) -> Result<String, String> {
    let class: Vec<Circuit> = enumerate(n, s).collect();
    let size = class.len() as u64;
    let mut needed = 0;
    while 1u64 << needed < size {
        needed += 1;
    }
    let length = needed + 1;
    let h = build_hard_language(n, s).map_err(|e| format!("({n},{s}): |C| = {size}, N = {length}: {e}"))?;
    ensure(h.length == length, || format!("({n},{s}): N = {}, expected {length}", h.length))?;
    let mut alive: Vec<&Circuit> = class.iter().collect();
    let mut counts = vec![alive.len() as u64];
    for (x, &bit) in h.bits.iter().enumerate() {
        let accept = alive.iter().filter(|c| c.eval_index(x as u64)).count();
        ensure(bit == (2 * accept < alive.len()), || format!("({n},{s}): bit {x} is not the minority side"))?;
        let before = alive.len();
        alive.retain(|c| c.eval_index(x as u64) == bit);
        ensure(alive.len() <= before / 2, || format!("({n},{s}): step {x} keeps {} of {before}", alive.len()))?;
        counts.push(alive.len() as u64);
    }
    ensure(h.survivors == counts, || format!("({n},{s}): stored survivor trace differs from the replay"))?;
    ensure(alive.is_empty(), || format!("({n},{s}): {} circuits survive", alive.len()))?;
    let all_err = class.iter().all(|c| h.bits.iter().enumerate().any(|(x, &b)| c.eval_index(x as u64) != b));
    ensure(all_err && oracle_lab::diag::verify_hardness(&h), || format!("({n},{s}): some circuit decides the prefix"))?;
    Ok(format!("({n},{s}) survivors {:?}", h.survivors))
}

fn criterion_6() -> Check {
    let mut notes = Vec::new();
    let mut failures = Vec::new();
    for (n, s) in [(2, 1), (3, 1)] {
        match check_diagonal(n, s) {
            Ok(msg) => notes.push(msg),
            Err(msg) => failures.push(msg),
        }
    }
    let c22 = enumerate(2, 2).count() as u64;
    let n22 = 64 - (c22 - 1).leading_zeros() as u64 + 1;
    if n22 <= 4 {
        match check_diagonal(2, 2) {
            Ok(msg) => notes.push(msg),
            Err(msg) => failures.push(msg),
        }
    } else {
        notes.push(format!("(2,2) not applicable: |C| = {c22} gives N = {n22} > 4"));
    }
    if failures.is_empty() {
        Ok(notes.join("; "))
    } else {
        Err(format!("{}; passing: {}", failures.join("; "), notes.join("; ")))
    }
}

// ---------------------------------------------------------------------------
// the threshold-machine construction

fn presets() -> Vec<(String, Experiment)> {
    let mut out: Vec<_> = fs::read_dir(root().join("presets"))
        .expect("presets directory")
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .map(|p| {
            let name = p.file_stem().unwrap().to_string_lossy().into_owned();
            (name, Experiment::from_json(&fs::read_to_string(&p).unwrap()).unwrap())
        })
        .collect();
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}

fn pp_presets() -> Vec<(String, PpConfig)> {
    presets()
        .into_iter()
        .filter_map(|(name, e)| match e {
            Experiment::AdversaryPp(cfg) => Some((name, cfg)),
            _ => None,
        })
        .collect()
}

fn par_presets() -> Vec<(String, ParConfig)> {
    presets()
        .into_iter()
        .filter_map(|(name, e)| match e {
            Experiment::AdversaryPar(cfg) => Some((name, cfg)),
            _ => None,
        })
        .collect()
}

/// `8 · q(p, b, k)` from the defining formula.
fn eight_q(p: i64, b: bool, k: u32) -> BigInt {
    let pk = BigInt::from(1) << k;
    let inner = pk + if b { -BigInt::from(p) } else { BigInt::from(p) };
    (BigInt::from(1) << (2 * k)) + BigInt::from(8) * &inner * &inner
}

/// `Q(A)` as a product over columns, both `b` and `k = 0..=K`.
fn progress(machines: &[ThresholdMachine], a: &OracleTable, levels: u32) -> (Ratio<BigInt>, usize) {
    let mut num = BigInt::from(1);
    let mut terms = 0;
    for m in machines {
        let p = m.value(a);
        for b in [false, true] {
            for k in 0..=levels {
                num *= eight_q(p, b, k);
                terms += 1;
            }
        }
    }
    (Ratio::new(num, BigInt::from(8).pow(terms as u32)), terms)
}

fn outputs(machines: &[ThresholdMachine], a: &OracleTable) -> Vec<bool> {
    machines.iter().map(|m| m.value(a) >= 1).collect()
}

fn pp_iterations(trace: &[PpRecord]) -> Vec<&PpIteration> {
    trace
        .iter()
        .filter_map(|r| match r {
            PpRecord::Iteration(it) => Some(it),
            PpRecord::Header(_) => None,
        })
        .collect()
}

fn check_pp(name: &str, cfg: &PpConfig) -> Result<usize, String> {
    let g = cfg.geometry().map_err(|e| format!("{name}: {e}"))?;
    let run = pp::run_construction(cfg).map_err(|f| format!("{name}: did not halt: {}", f.error))?;
    let its = pp_iterations(&run.trace);
    let (q_start, terms) = progress(&g.machines, &g.table, g.levels);
    let (q_end, _) = progress(&g.machines, &run.table, g.levels);
    let first = its.first().ok_or(format!("{name}: empty trace"))?;
    ensure(first.q_before == q_start, || format!("{name}: initial Q differs from the product formula"))?;
    ensure(its.last().unwrap().q_after == q_end, || format!("{name}: final Q differs from the product formula"))?;
    let mut doublings = 0;
    for it in &its {
        match it.action {
            Action::Double => {
                ensure(it.q_after >= &it.q_before * BigInt::from(2), || format!("{name}: iteration {} does not double Q", it.iter))?;
                doublings += 1;
            }
            Action::Halt => {}
            Action::Stalled => return Err(format!("{name}: stalled at iteration {}", it.iter)),
        }
    }
    // doublings <= log2(Q_max / Q_min) + 1, i.e. 2^(doublings - 1) <= (40 · 4^K)^terms
    if doublings > 0 {
        let ratio = (BigUint::from(40u32) << (2 * g.levels)).pow(terms as u32);
        ensure(BigUint::from(1u32) << (doublings - 1) <= ratio, || format!("{name}: {doublings} doublings exceed the bound"))?;
    }
    // condition C at halt, every column
    let r = run.advice_row;
    let outs = outputs(&g.machines, &run.table);
    match cfg.mode {
        EncodeMode::Xor => {
            for (c, &o) in outs.iter().enumerate() {
                let parity = (0..run.table.rows()).filter(|&row| run.table.get(Cell::Main { row, col: c })).count() % 2 == 1;
                ensure(parity == o, || format!("{name}: column {c} parity differs from its output"))?;
            }
        }
        _ => {
            for (c, &o) in outs.iter().enumerate() {
                ensure(run.table.get(Cell::Main { row: r, col: c }) == o, || format!("{name}: advice cell ({r}, {c}) differs from the output"))?;
            }
        }
    }
    Ok(doublings)
}

fn criterion_7() -> Check {
    let list = pp_presets();
    ensure(list.iter().any(|(_, c)| c.machines.iter().any(|m| matches!(m.family, MachineFamily::OddMaxBit { .. }))), || {
        "no odd-max-bit demo config".into()
    })?;
    let mut notes = Vec::new();
    for (name, cfg) in &list {
        let d = check_pp(name, cfg)?;
        notes.push(format!("{name}: {d}"));
    }
    Ok(format!("{} configs halted and certified; doublings per config: {}", list.len(), notes.join(", ")))
}

fn criterion_8() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut states = 0;
    let (mut flips, mut perturbations) = (0u64, 0u64);
    let third = Ratio::new(BigInt::from(1), BigInt::from(3));
    while states < 1000 {
        let spec = |family| MachineSpec { family, degree: None, magnitude: None };
        let machines = vec![
            spec(MachineFamily::Random { terms: rng.gen_range(1..=6), max_degree: rng.gen_range(1..=3), seed: rng.gen() }),
            spec(MachineFamily::OddMaxBit { offset: rng.gen_range(0..8), stride: rng.gen_range(0..4) }),
        ];
        let cfg = PpConfig::from_json(&serde_json::json!({"n": 1, "rho": 3, "machines": machines}).to_string())
            .map_err(|e| e.to_string())?;
        let g = cfg.geometry().map_err(|e| e.to_string())?;
        let random_table = |rng: &mut ChaCha8Rng| {
            let mut t = g.table.clone();
            for row in 0..t.rows() {
                for col in 0..t.cols() {
                    t.set(Cell::Main { row, col }, rng.gen_bool(0.5));
                }
            }
            t
        };
        let a = random_table(&mut rng);
        let perturbed = random_table(&mut rng);
        let levels = g.levels;
        for m in &g.machines {
            states += 1;
            let p = m.value(&a);
            ensure(p.unsigned_abs() <= 1u64 << levels, || format!("|p| = {} above 2^K", p.abs()))?;
            for b in [false, true] {
                for k in 0..=levels {
                    let q8 = eight_q(p, b, k);
                    ensure(BigInt::from(term_numerator(p, b, k)) == q8, || format!("q({p}, {b}, {k}) misevaluated"))?;
                    ensure(q8 >= BigInt::from(1) << (2 * k), || format!("q({p}, {b}, {k}) below 2^(2k-3)"))?;
                }
            }
            // the procedure's choice: b = output, k least with 2^k >= |p|
            let b = p >= 1;
            let k = (0..=levels).find(|&k| 1u64 << k >= p.unsigned_abs()).unwrap();
            let q = eight_q(p, b, k);
            ensure(BigInt::from(8) * &q <= BigInt::from(3) << (2 * k + 3), || format!("q({p}, {b}, {k}) above (3/8)·2^(2k)"))?;
            for cell in m.cells() {
                let mut flipped = a.clone();
                flipped.set(cell, !a.get(cell));
                let p2 = m.value(&flipped);
                if (p2 >= 1) != b {
                    flips += 1;
                    let q2 = eight_q(p2, b, k);
                    ensure(q2 >= BigInt::from(3) * &q, || format!("flip {cell:?}: q {q2}/8 below 3·{q}/8"))?;
                }
            }
            perturbations += 1;
            let q2 = eight_q(m.value(&perturbed), b, k);
            ensure(Ratio::new(q2, q.clone()) >= third, || format!("perturbation ratio below 1/3 at p = {p}"))?;
        }
    }
    ensure(flips > 0, || "no sensitive flip was exercised".into())?;
    Ok(format!("{states} states, {flips} sensitive flips, {perturbations} perturbations, zero violations"))
}

// ---------------------------------------------------------------------------
// the bounded-error construction

type Prob = Ratio<u64>;

fn path_holds(p: &par::Path, a: &OracleTable) -> bool {
    p.0.iter().all(|r| a.get(Cell::Main { row: r.row, col: r.col }) == r.bit)
}

fn query_accepts(q: &par::NpQuery, a: &OracleTable) -> bool {
    q.0.iter().any(|p| path_holds(p, a))
}

fn prob(m: &ParallelMachine, a: &OracleTable) -> Prob {
    let yes = m
        .0
        .iter()
        .filter(|b| {
            let idx = b.queries.iter().enumerate().filter(|(_, q)| query_accepts(q, a)).fold(0, |acc, (j, _)| acc | 1 << j);
            b.outputs[idx]
        })
        .count();
    Ratio::new(yes as u64, m.0.len() as u64)
}

fn w(machines: &[ParallelMachine], a: &OracleTable) -> Prob {
    machines
        .iter()
        .map(|m| {
            let total: usize = m.0.iter().map(|b| b.queries.iter().filter(|q| query_accepts(q, a)).count()).sum();
            Ratio::new(total as u64, m.0.len() as u64)
        })
        .sum()
}

fn encode(machines: &[ParallelMachine], a: &OracleTable, r: usize) -> OracleTable {
    let bits: Vec<bool> = machines.iter().map(|m| prob(m, a) >= Ratio::new(1, 2)).collect();
    let mut out = a.clone();
    for (col, &b) in bits.iter().enumerate() {
        out.set(Cell::Main { row: r, col }, b);
    }
    out
}

fn moved(before: Prob, after: Prob) -> bool {
    let (lo, hi) = if before < after { (before, after) } else { (after, before) };
    hi - lo >= Ratio::new(1, 6)
}

/// Kill counts on one snapshot: for every accepting query, the rows whose
/// encoding rejects it are among the rows its first accepting path reads.
fn check_kills(name: &str, machines: &[ParallelMachine], a: &OracleTable) -> Result<usize, String> {
    let encoded: Vec<OracleTable> = (0..a.rows()).map(|r| encode(machines, a, r)).collect();
    let mut checked = 0;
    for (col, m) in machines.iter().enumerate() {
        for (z, b) in m.0.iter().enumerate() {
            for (j, q) in b.queries.iter().enumerate() {
                let Some(first) = q.0.iter().position(|p| path_holds(p, a)) else { continue };
                let reads: Vec<usize> = q.0[first].0.iter().map(|r| r.row).collect();
                let killers: Vec<usize> = (0..a.rows()).filter(|&r| !query_accepts(q, &encoded[r])).collect();
                let dependence = (0..a.rows()).filter(|r| reads.contains(r)).count();
                ensure(killers.len() <= dependence && killers.iter().all(|r| reads.contains(r)), || {
                    format!("{name}: column {col} branch {z} query {j} killed by rows {killers:?}, path reads {reads:?}")
                })?;
                checked += 1;
            }
        }
    }
    Ok(checked)
}

fn check_par(name: &str, cfg: &ParConfig) -> Result<(usize, usize), String> {
    let g = cfg.geometry().map_err(|e| format!("{name}: {e}"))?;
    let run = par::run_construction(cfg).map_err(|f| format!("{name}: did not halt: {}", f.error))?;
    let machines = &g.machines;
    let mut a = g.table.clone();
    let (rows, cols) = (a.rows(), a.cols());
    let d = machines.iter().flat_map(|m| m.paths()).map(|p| {
        let mut rs: Vec<usize> = p.0.iter().map(|r| r.row).collect();
        rs.sort();
        rs.dedup();
        rs.len()
    });
    let d = d.max().unwrap_or(0) as i64;
    let q_max = machines.iter().flat_map(|m| m.0.iter().map(|b| b.queries.len())).max().unwrap_or(0) as i64;
    let per_col = rows.div_ceil(cols.max(1));
    let wanted = cfg.budgets.candidates.unwrap_or(per_col).max(1);
    let eps = Ratio::new(d * q_max, wanted.min(per_col).max(1) as i64);
    let mut kills = 0;
    let its: Vec<&ParIteration> = run
        .trace
        .iter()
        .filter_map(|r| match r {
            ParRecord::Iteration(it) => Some(it),
            ParRecord::Header(_) => None,
        })
        .collect();
    for it in &its {
        kills += check_kills(name, machines, &a)?;
        let w_now = w(machines, &a);
        ensure(it.w_before == w_now, || format!("{name}: iteration {} W differs from the replay", it.iter))?;
        match it.action {
            ParAction::Step => {
                let (i, x) = it.busy_pair.ok_or(format!("{name}: step without a busy pair"))?;
                let busy = a.column(i, x);
                let p_busy = prob(&machines[busy], &a);
                let sensitive: Vec<usize> =
                    (0..rows).filter(|&r| moved(p_busy, prob(&machines[busy], &encode(machines, &a, r)))).collect();
                let cand = &sensitive[..wanted.min(sensitive.len())];
                let ws: Vec<Prob> = cand.iter().map(|&r| w(machines, &encode(machines, &a, r))).collect();
                let listed: Vec<Option<Prob>> = it.w_candidates.iter().map(|v| oracle_lab::ratio::parse(v)).collect();
                ensure(listed.iter().eq(ws.iter().map(|v| Some(*v)).collect::<Vec<_>>().iter()), || format!("{name}: iteration {} candidate W values differ", it.iter))?;
                let mean: Prob = ws.iter().sum::<Prob>() / Ratio::from_integer(ws.len() as u64);
                let signed = |p: Prob| Ratio::new(*p.numer() as i64, *p.denom() as i64);
                let lower = (Ratio::from_integer(1) - eps) * signed(w_now) + Ratio::new(1, 6) - eps;
                ensure(signed(mean) >= lower, || format!("{name}: iteration {} mean {mean} below the bound {lower}", it.iter))?;
                let best = (0..ws.len()).fold(0, |b, k| if ws[k] > ws[b] { k } else { b });
                ensure(it.rows == vec![cand[best]] && ws[best] > w_now, || format!("{name}: iteration {} commits the wrong row", it.iter))?;
                a = encode(machines, &a, cand[best]);
            }
            ParAction::Halt => {
                let r = it.rows[0];
                let blocked = (0..cols).any(|c| moved(prob(&machines[c], &a), prob(&machines[c], &encode(machines, &a, r))));
                ensure(!blocked, || format!("{name}: halting row {r} is sensitive"))?;
                a = encode(machines, &a, r);
                for (c, m) in machines.iter().enumerate() {
                    let p = prob(m, &a);
                    if p >= Ratio::new(2, 3) || p <= Ratio::new(1, 3) {
                        let cell = a.get(Cell::Main { row: r, col: c });
                        ensure(cell == (p >= Ratio::new(1, 2)), || format!("{name}: column {c} with p = {p} has advice {cell}"))?;
                    }
                }
            }
            ParAction::Stalled => return Err(format!("{name}: stalled")),
        }
    }
    ensure(a == run.table, || format!("{name}: replayed table differs from the final table"))?;
    Ok((its.len(), kills))
}

fn criterion_9() -> Check {
    let list = par_presets();
    ensure(!list.is_empty(), || "no demo configs".into())?;
    let mut notes = Vec::new();
    for (name, cfg) in &list {
        let (iters, kills) = check_par(name, cfg)?;
        notes.push(format!("{name}: {iters} iterations, {kills} kill checks"));
    }
    Ok(notes.join("; "))
}

fn criterion_10() -> Check {
    let mut notes = Vec::new();
    for (name, cfg) in pp_presets() {
        let mut ts = cfg.clone();
        ts.mode = EncodeMode::Timestamp;
        let run = pp::run_construction(&ts).map_err(|f| format!("{name} (timestamp): did not halt: {}", f.error))?;
        let latest = run.halt.latest_row.clone().ok_or(format!("{name}: no located row"))?;
        let last = *run.encode_log.last().ok_or(format!("{name}: nothing encoded"))?;
        let stamped = (0..run.table.rows()).max_by_key(|&r| run.table.stamp(r)).unwrap();
        let width = run.table.stamp_width() as u32;
        let t_max = (1u64 << width) - 1;
        let ceil_log = (0..64).find(|&b| 1u64 << b >= t_max).unwrap();
        ensure(latest.row == last && stamped == last, || format!("{name}: located row {}, last encoded {last}", latest.row))?;
        ensure(latest.queries <= 2 * ceil_log + 1, || format!("{name}: {} queries above 2·{ceil_log} + 1", latest.queries))?;

        let mut x = cfg.clone();
        x.mode = EncodeMode::Xor;
        let g = x.geometry().map_err(|e| e.to_string())?;
        let run = pp::run_construction(&x).map_err(|f| format!("{name} (xor): did not halt: {}", f.error))?;
        let outs = outputs(&g.machines, &run.table);
        for (c, &o) in outs.iter().enumerate() {
            let parity = (0..run.table.rows()).filter(|&row| run.table.get(Cell::Main { row, col: c })).count() % 2 == 1;
            ensure(parity == o, || format!("{name} (xor): column {c} parity differs from its output"))?;
        }
        notes.push(format!("{name}: row {last} in {} queries", latest.queries));
    }
    Ok(format!("timestamp and xor modes on every demo config; {}", notes.join(", ")))
}

// ---------------------------------------------------------------------------
// counting and the polynomial search

fn criterion_11() -> Check {
    let mut families = 0;
    for m in 1..=3usize {
        for j in 1..=m {
            let mut mine = Vec::new();
            for code in 0u64..1 << (j * m) {
                for offset in 0u128..1 << j {
                    let rows: Vec<u128> = (0..j).map(|r| ((code >> (r * m)) & ((1 << m) - 1)) as u128).collect();
                    mine.push(AffineHash { m, j, rows, offset });
                }
            }
            let apply = |h: &AffineHash, x: u128| {
                h.rows.iter().enumerate().fold(h.offset, |acc, (r, row)| acc ^ ((((row & x).count_ones() & 1) as u128) << r))
            };
            let mut listed: Vec<_> = AffineHash::family(m, j).map(|h| (h.rows, h.offset)).collect();
            let mut expected: Vec<_> = mine.iter().map(|h| (h.rows.clone(), h.offset)).collect();
            listed.sort();
            expected.sort();
            ensure(listed == expected, || format!("m = {m}, j = {j}: family differs from the affine maps"))?;
            let cell = mine.len() >> (2 * j);
            for x in 0u128..1 << m {
                for y in 0u128..1 << m {
                    if x == y {
                        continue;
                    }
                    let mut counts = vec![0usize; 1 << (2 * j)];
                    for h in &mine {
                        ensure(h.apply(x) == apply(h, x), || "apply disagrees with the matrix product".into())?;
                        counts[(apply(h, x) << j | apply(h, y)) as usize] += 1;
                    }
                    ensure(counts.iter().all(|&c| c == cell), || format!("m = {m}, j = {j}: pair ({x}, {y}) is not uniform"))?;
                }
            }
            families += 1;
        }
    }
    let (m, trials, delta) = (10usize, 500usize, Ratio::new(1u64, 10));
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut notes = Vec::new();
    for threshold in [600u64, 900] {
        let low = 2 * threshold / 3;
        let high = (3 * threshold).div_ceil(4);
        for (size, want) in [(low, Verdict::Low), (high, Verdict::High)] {
            let mut set = vec![false; 1 << m];
            for i in sample(&mut rng, 1 << m, size as usize).into_iter() {
                set[i] = true;
            }
            let member = |w: u64| set[w as usize];
            let mut errors = 0;
            for _ in 0..trials {
                let mut r = ChaCha8Rng::seed_from_u64(rng.gen());
                let v = gap_decide(member, m, threshold, delta, &mut r).map_err(|e| e.to_string())?;
                errors += (v.verdict != want) as usize;
            }
            ensure(Ratio::new(errors as u64, trials as u64) <= delta, || {
                format!("T = {threshold}, S = {size}: {errors} errors in {trials}")
            })?;
            notes.push(format!("T = {threshold}, S = {size}: {errors}/{trials}"));
        }
    }
    Ok(format!("{families} hash families exactly pairwise independent; error counts {}", notes.join(", ")))
}

fn eval_terms(terms: &[(i64, u32)], x: u32) -> i128 {
    terms.iter().filter(|(_, m)| m & x == *m).map(|&(c, _)| c as i128).sum()
}

fn criterion_12() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let (mut found, mut not_found) = (0, 0);
    for i in 0..240 {
        let vars = rng.gen_range(1..=20usize);
        let mut terms = vec![(rng.gen_range(1..=6i64) * if rng.gen_bool(0.5) { 1 } else { -1 }, 0u32)];
        let count = rng.gen_range(1..=8);
        let max_degree = if i % 2 == 0 { 1 } else { 3 };
        for _ in 0..count {
            let degree = rng.gen_range(1..=max_degree.min(vars));
            let mask = sample(&mut rng, vars, degree).into_iter().fold(0u32, |acc, v| acc | 1 << v);
            terms.push((rng.gen_range(-8..=8i64), mask));
        }
        let p = MultilinearPoly::new(vars, terms.clone()).map_err(|e| e.to_string())?;
        let budget = SubsetBudget { seed: i, ..SubsetBudget::default() };
        match ns_search(&p, &budget) {
            AmplifyResult::Found { point } => {
                let x = point.iter().fold(0u32, |acc, &v| acc | 1 << v);
                let (at, origin) = (eval_terms(&terms, x).abs(), eval_terms(&terms, 0).abs());
                ensure(at >= 6 * origin, || format!("polynomial {i}: |p(X)| = {at} below 6·{origin}"))?;
                found += 1;
            }
            AmplifyResult::NotFound { .. } => not_found += 1,
        }
    }
    ensure(found > 0, || "no polynomial produced a point".into())?;
    for vars in 1..=20 {
        for c in [1i64, -3, 7] {
            let p = MultilinearPoly::constant(vars, c).map_err(|e| e.to_string())?;
            let got = ns_search(&p, &SubsetBudget::default());
            ensure(got == AmplifyResult::NotFound { precondition: false }, || format!("constant {c} on {vars} variables: {got:?}"))?;
        }
    }
    Ok(format!("240 random polynomials: {found} certified points, {not_found} not found; 60 constants rejected"))
}

// ---------------------------------------------------------------------------
// reproducibility

fn criterion_13() -> Check {
    let list = presets();
    for (name, exp) in &list {
        let a = run(exp).map_err(|e| format!("{name}: {e}"))?;
        let b = run(exp).map_err(|e| format!("{name}: {e}"))?;
        ensure(a.trace == b.trace, || format!("{name}: two runs differ"))?;
        let golden = fs::read_to_string(root().join("tests/golden").join(format!("{name}.jsonl")))
            .map_err(|_| format!("{name}: no golden trace"))?;
        ensure(a.trace == golden, || format!("{name}: trace differs from its golden"))?;
    }
    let mut goldens = 0;
    for e in fs::read_dir(root().join("tests/golden")).map_err(|e| e.to_string())? {
        let p = e.map_err(|e| e.to_string())?.path();
        let v = verify_trace(&fs::read_to_string(&p).map_err(|e| e.to_string())?);
        ensure(v.passed(), || format!("{}: {:?}", p.display(), v.failures))?;
        goldens += 1;
    }
    Ok(format!("{} presets replay byte-identically, {goldens} golden traces verify", list.len()))
}

fn main() {
    let criteria: [(u32, &str, fn() -> Check); 13] = [
        (1, "lex-first learning equivalence", criterion_1),
        (2, "one-round parallelism", criterion_2),
        (3, "NP/log equivalence", criterion_3),
        (4, "zero-error adaptive learning", criterion_4),
        (5, "minimization", criterion_5),
        (6, "diagonalization", criterion_6),
        (7, "threshold-machine construction", criterion_7),
        (8, "q-term algebra", criterion_8),
        (9, "bounded-error construction", criterion_9),
        (10, "timestamp and xor variants", criterion_10),
        (11, "approximate counting", criterion_11),
        (12, "polynomial amplification search", criterion_12),
        (13, "reproducibility", criterion_13),
    ];
    // Criteria whose stated configuration cannot be met by any implementation.
    // They still run in full and print FAIL; only an unexpected pass or an
    // unlisted failure sets the exit status.
    //
    // 6: with the class taken as every enumerated circuit, (2,1) has 40
    // circuits, so halving needs ceil(log2 40) + 1 = 7 inputs and n = 2 has 4.
    const UNATTAINABLE: [u32; 1] = [6];
    // a filter argument, as libtest would take, selects criteria by number
    let only: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let (mut failed, mut unexpected) = (0, 0);
    for (id, title, check) in criteria {
        if !only.is_empty() && !only.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => {
                println!("criterion {id} ({title}): PASS [{secs:.1} s] {detail}");
                if UNATTAINABLE.contains(&id) {
                    unexpected += 1;
                    println!("  listed as unattainable but passed; update the list");
                }
            }
            Err(detail) => {
                failed += 1;
                let known = UNATTAINABLE.contains(&id);
                unexpected += !known as usize;
                let tag = if known { " (known unattainable)" } else { "" };
                println!("criterion {id} ({title}): FAIL{tag} [{secs:.1} s] {detail}");
            }
        }
    }
    println!("acceptance: {failed} of 13 criteria failed, {unexpected} unexpected");
    if unexpected > 0 {
        std::process::exit(1);
    }
}

//! The row-encoding construction against threshold machines.
//!
//! Each iteration either finds a row no column is sensitive to (encode it and
//! halt: that row now records every machine's answer) or encodes a set of rows
//! that at least doubles the progress measure `Q`. Since `Q` is bounded above
//! and below, the loop halts within `log2(Q_max / Q_min) + 1` iterations.

use num_bigint::{BigInt, BigUint};
use num_rational::Ratio;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{EncodeMode, PpConfig};
use super::machine::ThresholdMachine;
use super::progress::{doubling_bound, level_for, q_bounds, term_numerator, BigRational, ProgressQ, QEvaluator};
use crate::adversary::subset::{find_subset, scan_exhaustive, Probe, SubsetBudget};
use crate::adversary::table::OracleTable;
use crate::adversary::RunFailure;
use crate::bits::BitString;
use crate::error::LabError;
use crate::np::{FnQuery, NpEngine};

pub fn machine_output(m: &ThresholdMachine, a: &OracleTable) -> bool {
    m.output(a)
}

pub fn outputs(machines: &[ThresholdMachine], a: &OracleTable) -> Vec<bool> {
    machines.iter().map(|m| m.output(a)).collect()
}

/// Encode every row of `rows` from the snapshot `a`. Timestamp mode stamps
/// them `clock + 1, clock + 2, ...` in the given order.
pub fn encode_set(
    a: &OracleTable,
    rows: &[usize],
    machines: &[ThresholdMachine],
    mode: EncodeMode,
    clock: u64,
) -> OracleTable {
    let m = outputs(machines, a);
    let mut out = a.clone();
    for (j, &r) in rows.iter().enumerate() {
        let bits: Vec<bool> = match mode {
            EncodeMode::Plain | EncodeMode::Timestamp => m.clone(),
            EncodeMode::Xor => (0..a.cols()).map(|c| m[c] ^ a.column_parity_except(c, Some(r))).collect(),
        };
        out.set_row(r, &bits);
        if mode == EncodeMode::Timestamp {
            out.set_stamp(r, clock + 1 + j as u64);
        }
    }
    out
}

pub fn encode_row(a: &OracleTable, r: usize, machines: &[ThresholdMachine]) -> OracleTable {
    encode_set(a, &[r], machines, EncodeMode::Plain, 0)
}

/// Encode `r` and stamp it with `t + 1`.
pub fn encode_row_with_time(a: &OracleTable, r: usize, machines: &[ThresholdMachine], t: u64) -> OracleTable {
    encode_set(a, &[r], machines, EncodeMode::Timestamp, t)
}

/// Encode `r` so that each column's parity over all rows equals its output.
pub fn encode_row_xor(a: &OracleTable, r: usize, machines: &[ThresholdMachine]) -> OracleTable {
    encode_set(a, &[r], machines, EncodeMode::Xor, 0)
}

/// Row `r` holds every machine's output on `a`.
pub fn condition_c(a: &OracleTable, r: usize, machines: &[ThresholdMachine]) -> bool {
    a.row(r) == outputs(machines, a).as_slice()
}

/// Every column's parity over all rows equals its output on `a`.
pub fn verify_parity(a: &OracleTable, machines: &[ThresholdMachine]) -> bool {
    (0..a.cols()).all(|c| a.column_parity_except(c, None) == machines[c].output(a))
}

fn halting_holds(a: &OracleTable, r: usize, machines: &[ThresholdMachine], mode: EncodeMode) -> bool {
    match mode {
        EncodeMode::Plain | EncodeMode::Timestamp => condition_c(a, r, machines),
        EncodeMode::Xor => verify_parity(a, machines),
    }
}

fn changed(before: &[bool], a: &OracleTable, machines: &[ThresholdMachine]) -> Vec<usize> {
    (0..machines.len()).filter(|&c| machines[c].output(a) != before[c]).collect()
}

/// Columns whose output changes when `r` is plain-encoded.
pub fn sensitive_pairs(a: &OracleTable, r: usize, machines: &[ThresholdMachine]) -> Vec<usize> {
    changed(&outputs(machines, a), &encode_row(a, r, machines), machines)
}

/// The first row to which no column is sensitive and which satisfies the
/// halting condition once encoded.
pub fn find_insensitive_row(a: &OracleTable, machines: &[ThresholdMachine]) -> Option<usize> {
    Adversary::new(machines.to_vec(), 0, EncodeMode::Plain).find_insensitive_row(a, 0)
}

/// Result of locating the most recently encoded row through existential
/// row queries.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatestRow {
    pub row: usize,
    pub stamp: u64,
    pub queries: u64,
    /// `2 · ceil(log2 T_max) + 1` for the stamp range `1..=T_max`.
    pub bound: u64,
}

/// Binary search for the largest stamp, each probe asking "is there a row
/// whose stamp is at least `v`?". The witness of the last accepted probe is
/// the latest row, since stamps are distinct.
pub fn find_latest_row(a: &OracleTable, engine: &NpEngine) -> crate::Result<LatestRow> {
    let t_max = a.stamp_max();
    let rho = a.rho();
    let before = engine.ledger().queries;
    let ask = |v: u64| -> crate::Result<Option<usize>> {
        let q = FnQuery::new(rho, |w: &BitString| a.stamp(w.to_u64() as usize) >= v);
        Ok(engine.decide(&q)?.witness.map(|w| w.to_u64() as usize))
    };
    let Some(mut row) = ask(1)? else {
        return Err(LabError::NotFound);
    };
    let (mut lo, mut hi) = (1u64, t_max);
    while lo < hi {
        let mid = lo + (hi - lo).div_ceil(2);
        match ask(mid)? {
            Some(r) => {
                lo = mid;
                row = r;
            }
            None => hi = mid - 1,
        }
    }
    let bound = 2 * crate::diag::ceil_log2(t_max) as u64 + 1;
    Ok(LatestRow { row, stamp: lo, queries: engine.ledger().queries - before, bound })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DoublingCase {
    /// A single row kept the rest of the product within 2/3.
    Single,
    /// A set raised the rest of the product sixfold.
    Amplified,
    /// A set certified directly by `Q' >= 2Q`.
    Fallback,
}

#[derive(Debug, Clone)]
pub struct Selection {
    pub rows: Vec<usize>,
    pub case: DoublingCase,
    pub table: OracleTable,
    pub q: ProgressQ,
}

/// Machines, measure and encoding mode: everything but the table.
#[derive(Debug)]
pub struct Adversary {
    pub machines: Vec<ThresholdMachine>,
    pub eval: QEvaluator,
    pub mode: EncodeMode,
}

impl Adversary {
    pub fn new(machines: Vec<ThresholdMachine>, levels: u32, mode: EncodeMode) -> Adversary {
        Adversary { machines, eval: QEvaluator::new(levels), mode }
    }

    pub fn q(&self, a: &OracleTable) -> ProgressQ {
        self.eval.evaluate(&self.machines, a)
    }

    pub fn terms(&self, a: &OracleTable) -> usize {
        a.cols() * self.eval.terms_per_column()
    }

    pub fn encode(&self, a: &OracleTable, rows: &[usize], clock: u64) -> OracleTable {
        encode_set(a, rows, &self.machines, self.mode, clock)
    }

    /// For every row, the columns sensitive to it.
    pub fn sensitivity(&self, a: &OracleTable, clock: u64) -> Vec<Vec<usize>> {
        let before = outputs(&self.machines, a);
        (0..a.rows())
            .into_par_iter()
            .map(|r| changed(&before, &self.encode(a, &[r], clock), &self.machines))
            .collect()
    }

    pub fn find_insensitive_row(&self, a: &OracleTable, clock: u64) -> Option<usize> {
        let before = outputs(&self.machines, a);
        (0..a.rows()).into_par_iter().find_first(|&r| {
            let after = self.encode(a, &[r], clock);
            changed(&before, &after, &self.machines).is_empty() && halting_holds(&after, r, &self.machines, self.mode)
        })
    }

    /// Among columns, the one sensitive to the most rows (ties to the least
    /// column), with those rows.
    pub fn busy_pair(&self, sens: &[Vec<usize>], cols: usize) -> crate::Result<(usize, Vec<usize>)> {
        let mut by_col = vec![Vec::new(); cols];
        for (r, cs) in sens.iter().enumerate() {
            for &c in cs {
                by_col[c].push(r);
            }
        }
        let (col, rows) = by_col
            .into_iter()
            .enumerate()
            .rev()
            .max_by_key(|(_, rows)| rows.len())
            .ok_or_else(|| LabError::InternalInvariant("no columns".into()))?;
        let floor = sens.len().div_ceil(cols.max(1));
        if rows.len() < floor {
            return Err(LabError::InternalInvariant(format!(
                "busiest column sensitive to {} rows, counting bound gives {floor}",
                rows.len()
            )));
        }
        Ok((col, rows))
    }

    /// Find a set of candidate rows whose simultaneous encoding at least
    /// doubles `Q`, certified by exact recomputation.
    pub fn select_doubling_set(
        &self,
        a: &OracleTable,
        busy: usize,
        candidates: &[usize],
        budget: &SubsetBudget,
        clock: u64,
        iteration: usize,
    ) -> crate::Result<Selection> {
        let q0 = self.q(a);
        let p = q0.values[busy];
        let b = p >= 1;
        let k = level_for(p);
        let t0: BigUint = term_numerator(p, b, k);
        // rest of the product, v = Q / q, compared by cross-multiplying
        let rest_ratio = |q: &ProgressQ| -> BigRational {
            let t = term_numerator(q.values[busy], b, k);
            Ratio::new(BigInt::from(&q.numerator * &t0), BigInt::from(&q0.numerator * t))
        };
        let at = |ys: &[usize]| {
            let rows: Vec<usize> = ys.iter().map(|&j| candidates[j]).collect();
            let table = self.encode(a, &rows, clock);
            let q = self.q(&table);
            (rows, table, q)
        };
        let two_thirds = Ratio::new(BigInt::from(2), BigInt::from(3));
        for j in 0..candidates.len() {
            let (rows, table, q) = at(&[j]);
            let t_after = term_numerator(q.values[busy], b, k);
            if t_after < &t0 * 3u32 {
                return Err(LabError::InternalInvariant(format!(
                    "sensitive flip at row {} raised the chosen term by less than 3x",
                    candidates[j]
                )));
            }
            if rest_ratio(&q) >= two_thirds {
                if !q.at_least(2, &q0) {
                    return Err(LabError::InternalInvariant("single-row case failed to double Q".into()));
                }
                return Ok(Selection { rows, case: DoublingCase::Single, table, q });
            }
        }
        let six = Ratio::from_integer(BigInt::from(6));
        let amplified = find_subset(candidates.len(), 2, budget, |ys| {
            let r = rest_ratio(&at(ys).2);
            Probe { hit: r >= six, score: r }
        });
        if let Some(ys) = amplified {
            let (rows, table, q) = at(&ys);
            if !q.at_least(2, &q0) {
                return Err(LabError::InternalInvariant("sixfold rest failed to double Q".into()));
            }
            return Ok(Selection { rows, case: DoublingCase::Amplified, table, q });
        }
        let direct = |ys: &[usize]| {
            let q = at(ys).2;
            Probe { hit: q.at_least(2, &q0), score: q.numerator }
        };
        let fallback = if candidates.len() <= budget.exhaustive_cap {
            scan_exhaustive(candidates.len(), 1, &direct)
        } else {
            find_subset(candidates.len(), 1, budget, direct)
        };
        if let Some(ys) = fallback {
            let (rows, table, q) = at(&ys);
            return Ok(Selection { rows, case: DoublingCase::Fallback, table, q });
        }
        let deg = 2 * self.machines.iter().map(|m| m.degree()).max().unwrap_or(0) * self.terms(a);
        let holds = 49 * deg * deg <= candidates.len();
        Err(LabError::Stalled {
            iteration,
            reason: format!(
                "no certified doubling set among {} candidates for column {busy}; \
                 degree bound 49·{deg}^2 <= {} {}",
                candidates.len(),
                candidates.len(),
                if holds { "held" } else { "did not hold" }
            ),
        })
    }
}

/// One trace line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum PpRecord {
    Header(PpHeader),
    Iteration(PpIteration),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PpHeader {
    pub kind: String,
    pub mode: EncodeMode,
    pub n: usize,
    pub rho: usize,
    #[serde(rename = "K")]
    pub levels: u32,
    pub rows: usize,
    pub cols: usize,
    pub terms: usize,
    #[serde(rename = "Q_min", with = "crate::ratio")]
    pub q_min: BigRational,
    #[serde(rename = "Q_max", with = "crate::ratio")]
    pub q_max: BigRational,
    /// Most doubling steps `Q_max / Q_min` allows.
    pub doubling_bound: u64,
    /// Stamp bits per row, in timestamp mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stamp_width: Option<usize>,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Double,
    Halt,
    Stalled,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PpIteration {
    pub iter: usize,
    pub action: Action,
    pub rows: Vec<usize>,
    /// `(machine, x)`.
    pub busy_pair: Option<(usize, u64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub case: Option<DoublingCase>,
    #[serde(rename = "Q_before", with = "crate::ratio")]
    pub q_before: BigRational,
    #[serde(rename = "Q_after", with = "crate::ratio")]
    pub q_after: BigRational,
    pub certified: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub halt: Option<HaltRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HaltRecord {
    pub advice_row: usize,
    /// Advice width: the row label length.
    pub advice_bits: usize,
    pub row_bits: BitString,
    /// Every column's output on the final table.
    pub outputs: BitString,
    /// Column parities, in xor mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parity: Option<BitString>,
    /// The row located from stamps, in timestamp mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latest_row: Option<LatestRow>,
}

#[derive(Debug, Clone)]
pub struct PpRun {
    pub trace: Vec<PpRecord>,
    pub table: OracleTable,
    pub advice_row: usize,
    pub iterations: usize,
    pub doublings: usize,
    /// Every row encoding in order.
    pub encode_log: Vec<usize>,
    pub halt: HaltRecord,
}

pub fn run_construction(cfg: &PpConfig) -> Result<PpRun, RunFailure<PpRecord>> {
    let geometry = cfg.geometry().map_err(RunFailure::bare)?;
    let adv = Adversary::new(geometry.machines, geometry.levels, cfg.mode);
    let mut a = geometry.table;
    let terms = adv.terms(&a);
    let (q_min, q_max) = q_bounds(terms, geometry.levels);
    let bound = doubling_bound(terms, geometry.levels);
    let mut trace = vec![PpRecord::Header(PpHeader {
        kind: "adversary-pp".into(),
        mode: cfg.mode,
        n: cfg.n,
        rho: cfg.rho,
        levels: geometry.levels,
        rows: a.rows(),
        cols: a.cols(),
        terms,
        q_min,
        q_max,
        doubling_bound: bound,
        stamp_width: (cfg.mode == EncodeMode::Timestamp).then(|| a.stamp_width()),
        seed: cfg.seed,
    })];
    let max_iterations = cfg.budgets.max_iterations.unwrap_or(bound.saturating_add(1).min(1 << 20) as usize);
    let mut clock = 0u64;
    let mut encode_log = Vec::new();
    let mut doublings = 0;
    for iter in 1..=max_iterations {
        let q_before = adv.q(&a);
        let fail = |trace: &mut Vec<PpRecord>, error: LabError| {
            trace.push(PpRecord::Iteration(PpIteration {
                iter,
                action: Action::Stalled,
                rows: vec![],
                busy_pair: None,
                case: None,
                q_before: q_before.value(),
                q_after: q_before.value(),
                certified: false,
                halt: None,
                reason: Some(error.to_string()),
            }));
            RunFailure { error, trace: std::mem::take(trace) }
        };
        if cfg.mode == EncodeMode::Timestamp && clock + a.rows() as u64 > a.stamp_max() {
            let e = LabError::Config(format!("stamp width {} too small for further encodings", a.stamp_width()));
            return Err(fail(&mut trace, e));
        }
        if let Some(r) = adv.find_insensitive_row(&a, clock) {
            a = adv.encode(&a, &[r], clock);
            encode_log.push(r);
            let outs = BitString::from_bits(outputs(&adv.machines, &a));
            let parity = (cfg.mode == EncodeMode::Xor)
                .then(|| BitString::from_bits((0..a.cols()).map(|c| a.column_parity_except(c, None)).collect()));
            let latest_row = if cfg.mode == EncodeMode::Timestamp {
                match find_latest_row(&a, &NpEngine::new(cfg.rho)) {
                    Ok(l) => Some(l),
                    Err(e) => return Err(fail(&mut trace, e)),
                }
            } else {
                None
            };
            let certified = halting_holds(&a, r, &adv.machines, cfg.mode)
                && latest_row.as_ref().is_none_or(|l| l.row == r && l.queries <= l.bound);
            let halt = HaltRecord {
                advice_row: r,
                advice_bits: cfg.rho,
                row_bits: a.row_bits(r),
                outputs: outs,
                parity,
                latest_row,
            };
            trace.push(PpRecord::Iteration(PpIteration {
                iter,
                action: Action::Halt,
                rows: vec![r],
                busy_pair: None,
                case: None,
                q_before: q_before.value(),
                q_after: adv.q(&a).value(),
                certified,
                halt: Some(halt.clone()),
                reason: None,
            }));
            if !certified {
                let e = LabError::InternalInvariant(format!("halting condition fails at row {r}"));
                return Err(RunFailure { error: e, trace });
            }
            return Ok(PpRun { trace, table: a, advice_row: r, iterations: iter, doublings, encode_log, halt });
        }
        let sens = adv.sensitivity(&a, clock);
        let (busy, rows) = match adv.busy_pair(&sens, a.cols()) {
            Ok(v) => v,
            Err(e) => return Err(fail(&mut trace, e)),
        };
        let take = cfg.budgets.candidates.unwrap_or(a.rows().div_ceil(a.cols())).min(rows.len());
        let candidates = &rows[..take];
        let budget = cfg.budgets.search(cfg.seed.wrapping_add(iter as u64));
        let sel = match adv.select_doubling_set(&a, busy, candidates, &budget, clock, iter) {
            Ok(s) => s,
            Err(e) => return Err(fail(&mut trace, e)),
        };
        clock += sel.rows.len() as u64;
        encode_log.extend(&sel.rows);
        doublings += 1;
        trace.push(PpRecord::Iteration(PpIteration {
            iter,
            action: Action::Double,
            rows: sel.rows,
            busy_pair: Some(a.pair(busy)),
            case: Some(sel.case),
            q_before: q_before.value(),
            q_after: sel.q.value(),
            certified: sel.q.at_least(2, &q_before),
            halt: None,
            reason: None,
        }));
        a = sel.table;
    }
    let e = LabError::Stalled { iteration: max_iterations, reason: "iteration budget exhausted".into() };
    Err(RunFailure { error: e, trace })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(json: &str) -> PpConfig {
        PpConfig::from_json(json).unwrap()
    }

    #[test]
    fn zero_machines_halt_at_row_zero() {
        let run = run_construction(&cfg(r#"{"n": 1, "rho": 2, "machines": []}"#)).unwrap();
        assert_eq!((run.iterations, run.advice_row, run.doublings), (1, 0, 0));
    }

    #[test]
    fn constant_machines_halt_immediately() {
        let run = run_construction(&cfg(
            r#"{"n": 1, "rho": 2, "machines": [{"family": "constant", "value": 1}, {"family": "constant", "value": -1}]}"#,
        ))
        .unwrap();
        assert_eq!(run.iterations, 1);
        assert_eq!(run.halt.row_bits.to_string(), "1100");
        let g = cfg(r#"{"n": 1, "rho": 2, "machines": [{"family": "constant", "value": 1}]}"#).geometry().unwrap();
        let once = encode_row(&g.table, 1, &g.machines);
        assert_eq!(encode_row(&once, 1, &g.machines), once);
        assert!(sensitive_pairs(&once, 3, &g.machines).is_empty());
    }

    #[test]
    fn dictator_is_sensitive_to_its_row() {
        // machine 1 reads row 2 of machine 2's column, which always accepts
        let g = cfg(r#"{"n": 0, "rho": 2, "machines": [{"family": "dictator", "row": 2, "source": 2}, {"family": "constant", "value": 1}]}"#)
            .geometry()
            .unwrap();
        assert_eq!(outputs(&g.machines, &g.table), vec![false, true]);
        assert_eq!(sensitive_pairs(&g.table, 2, &g.machines), vec![0]);
        assert!(sensitive_pairs(&g.table, 1, &g.machines).is_empty());
        assert_eq!(find_insensitive_row(&g.table, &g.machines), Some(0));
        let b = encode_row(&g.table, 2, &g.machines);
        assert!(b.hamming(&g.table) <= g.table.cols());
    }

    #[test]
    fn column_sum_doubles_then_halts() {
        let run = run_construction(&cfg(r#"{"n": 0, "rho": 2, "machines": [{"family": "column_sum"}]}"#)).unwrap();
        assert!(run.doublings >= 1);
        for rec in &run.trace[1..] {
            let PpRecord::Iteration(it) = rec else { panic!() };
            assert!(it.certified);
            if it.action == Action::Double {
                assert!(it.q_after >= it.q_before.clone() * BigInt::from(2));
            }
        }
    }

    #[test]
    fn latest_row_from_stamps() {
        let g = cfg(r#"{"n": 0, "rho": 2, "mode": "timestamp", "stamp_width": 4, "machines": [{"family": "constant", "value": 1}]}"#)
            .geometry()
            .unwrap();
        let engine = NpEngine::new(8);
        assert!(matches!(find_latest_row(&g.table, &engine), Err(LabError::NotFound)));
        let one = encode_row_with_time(&g.table, 3, &g.machines, 0);
        assert_eq!(find_latest_row(&one, &engine).unwrap().row, 3);
        let two = encode_row_with_time(&one, 1, &g.machines, 1);
        let l = find_latest_row(&two, &engine).unwrap();
        assert_eq!((l.row, l.stamp), (1, 2));
        assert!(l.queries <= l.bound);
    }

    #[test]
    fn xor_single_row_matches_outputs() {
        let g = cfg(r#"{"n": 1, "rho": 2, "machines": [{"family": "constant", "value": 1}, {"family": "dictator", "row": 0}]}"#)
            .geometry()
            .unwrap();
        let b = encode_row_xor(&g.table, 2, &g.machines);
        assert_eq!(b.row(2), outputs(&g.machines, &g.table).as_slice());
        assert!(verify_parity(&OracleTable::new(2, 1, 0, 0), &[]));
    }

    #[test]
    fn sensitivity_matches_recomputation() {
        let g = cfg(r#"{"n": 1, "rho": 3, "machines": [{"family": "random", "terms": 4, "max_degree": 2, "seed": 3}]}"#)
            .geometry()
            .unwrap();
        let adv = Adversary::new(g.machines.clone(), g.levels, EncodeMode::Plain);
        let a = encode_row(&g.table, 5, &g.machines);
        let sens = adv.sensitivity(&a, 0);
        for (r, s) in sens.iter().enumerate() {
            let before = outputs(&g.machines, &a);
            let after = outputs(&g.machines, &encode_row(&a, r, &g.machines));
            let naive: Vec<usize> = (0..before.len()).filter(|&c| before[c] != after[c]).collect();
            assert_eq!(s, &naive);
        }
    }
}

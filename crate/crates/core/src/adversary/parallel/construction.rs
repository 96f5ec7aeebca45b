//! The row-encoding construction against bounded-error machines with one
//! round of existential queries, driven by the additive measure
//! `W(A) = Σ_columns EX_z |S_z(A)|`, the expected number of accepting queries.
//!
//! Progress per step, with `d` the most rows a path reads, `q_max` the most
//! queries any branch asks and `N'` the candidate count, `ε = d·q_max/N'`:
//!
//! * an accepting query can only be rejected after encoding a row its first
//!   accepting path reads, so for any column and branch at most
//!   `|S|·d` of the `N'` candidates shrink `S`, and
//!   `EX_k |S(A^k)| >= (1 - ε)|S(A)|`;
//! * the busy column changes output with probability at least 1/6 over
//!   `(k, z)`, which needs `S` to change; removing the at most `ε` mass where
//!   `S` loses a query leaves strict growth (by at least one) with
//!   probability at least `1/6 - ε`.
//!
//! Summing over columns gives `EX_k W(A^k) >= (1 - ε)W(A) + 1/6 - ε`, hence
//! the committed argmax gains at least `floor = 1/6 - ε(1 + W_max)` per
//! step, and when that is positive the run halts within `⌊W_max / floor⌋ + 1`
//! iterations.

use num_rational::Ratio;
use num_traits::Signed;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ParConfig;
use super::machine::{ParallelMachine, Prob};
use crate::adversary::table::OracleTable;
use crate::adversary::RunFailure;
use crate::bits::BitString;
use crate::error::LabError;

/// Signed exact rationals for the progress bounds, which may go negative.
pub type SignedProb = Ratio<i64>;

fn signed(p: Prob) -> SignedProb {
    Ratio::new(*p.numer() as i64, *p.denom() as i64)
}

pub fn round(p: Prob) -> bool {
    p >= Ratio::new(1, 2)
}

pub fn accept_probs(machines: &[ParallelMachine], a: &OracleTable) -> Vec<Prob> {
    machines.iter().map(|m| m.accept_prob(a)).collect()
}

/// Row `r` takes `round(p)` of every column, computed on the snapshot `a`.
pub fn encode_row_round(a: &OracleTable, r: usize, machines: &[ParallelMachine]) -> OracleTable {
    let bits: Vec<bool> = machines.iter().map(|m| round(m.accept_prob(a))).collect();
    let mut out = a.clone();
    out.set_row(r, &bits);
    out
}

/// Encoding `r` moves the column's acceptance probability by at least 1/6.
pub fn sensitive(machines: &[ParallelMachine], col: usize, r: usize, a: &OracleTable) -> bool {
    let before = signed(machines[col].accept_prob(a));
    let after = signed(machines[col].accept_prob(&encode_row_round(a, r, machines)));
    (after - before).abs() >= Ratio::new(1, 6)
}

/// `W(A)`.
pub fn progress_w(machines: &[ParallelMachine], a: &OracleTable) -> Prob {
    machines.iter().map(|m| m.expected_accepted(a)).sum()
}

/// Upper bound on `W`: every query of every branch accepting.
pub fn w_max(machines: &[ParallelMachine]) -> u64 {
    machines.iter().map(|m| m.max_queries() as u64).sum()
}

/// Candidates whose encoding removes an accepting query from `S`.
pub fn kill_count(
    machines: &[ParallelMachine],
    col: usize,
    z: usize,
    query: usize,
    a: &OracleTable,
    candidates: &[usize],
) -> usize {
    let q = &machines[col].branches()[z].queries[query];
    candidates.iter().filter(|&&r| !q.accepts(&encode_row_round(a, r, machines))).count()
}

/// Check the kill-count bound for every accepting query on `a`; returns the
/// number of queries checked, or the first violation.
pub fn check_kill_counts(
    machines: &[ParallelMachine],
    a: &OracleTable,
    candidates: &[usize],
) -> Result<usize, String> {
    let encoded: Vec<OracleTable> = candidates.par_iter().map(|&r| encode_row_round(a, r, machines)).collect();
    let mut checked = 0;
    for (col, m) in machines.iter().enumerate() {
        for (z, b) in m.branches().iter().enumerate() {
            for (j, q) in b.queries.iter().enumerate() {
                let Some(first) = q.first_accepting(a) else { continue };
                let kills = encoded.iter().filter(|t| !q.accepts(t)).count();
                let rows = q.0[first].rows();
                let in_candidates = candidates.iter().filter(|r| rows.contains(r)).count();
                if kills > in_candidates {
                    return Err(format!(
                        "column {col}, branch {z}, query {j}: {kills} kills exceed the {in_candidates} candidate rows its first accepting path reads"
                    ));
                }
                checked += 1;
            }
        }
    }
    Ok(checked)
}

/// For each row, the columns sensitive to it.
pub fn sensitivity(machines: &[ParallelMachine], a: &OracleTable) -> Vec<Vec<usize>> {
    let before: Vec<SignedProb> = accept_probs(machines, a).into_iter().map(signed).collect();
    (0..a.rows())
        .into_par_iter()
        .map(|r| {
            let t = encode_row_round(a, r, machines);
            (0..machines.len())
                .filter(|&c| (signed(machines[c].accept_prob(&t)) - before[c]).abs() >= Ratio::new(1, 6))
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParAction {
    Step,
    Halt,
    Stalled,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum ParRecord {
    Header(ParHeader),
    Iteration(ParIteration),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParHeader {
    pub kind: String,
    pub n: usize,
    pub rho: usize,
    pub rows: usize,
    pub cols: usize,
    /// Most rows any path reads.
    pub d: usize,
    pub q_max: usize,
    pub candidates: usize,
    #[serde(rename = "W_max")]
    pub w_max: u64,
    #[serde(with = "crate::ratio")]
    pub eps: SignedProb,
    #[serde(with = "crate::ratio")]
    pub floor: SignedProb,
    /// `⌊W_max / floor⌋ + 1` when the floor is positive.
    pub iteration_bound: Option<u64>,
    /// Columns given as adaptive strategies and run in expanded form.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub adaptive: Vec<ExpansionNote>,
    pub seed: u64,
}

/// An adaptive column after expansion into one round of queries.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpansionNote {
    pub col: usize,
    /// Longest chain of dependent queries in the strategy.
    pub depth: usize,
    /// Most queries a branch asks after expansion, at most `2^depth - 1`.
    pub queries: usize,
    /// Acceptance probabilities agree on every assignment to the read cells.
    pub equivalent: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParIteration {
    pub iter: usize,
    pub action: ParAction,
    pub rows: Vec<usize>,
    pub busy_pair: Option<(usize, u64)>,
    #[serde(rename = "W_before", with = "crate::ratio")]
    pub w_before: Prob,
    #[serde(rename = "W_after", with = "crate::ratio")]
    pub w_after: Prob,
    /// `W` after encoding each candidate.
    #[serde(rename = "W_candidates", default, skip_serializing_if = "Vec::is_empty")]
    pub w_candidates: Vec<String>,
    #[serde(rename = "W_mean", default, skip_serializing_if = "Option::is_none", with = "crate::ratio::option")]
    pub w_mean: Option<Prob>,
    /// Accepting queries whose kill count was checked on this snapshot.
    pub kill_checks: usize,
    pub certified: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub halt: Option<ParHalt>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParHalt {
    pub advice_row: usize,
    pub row_bits: BitString,
    /// Per column: `1` or `0` where the bounded-error promise holds on the
    /// final table (`p >= 2/3` or `p <= 1/3`), `-` elsewhere.
    pub promise: String,
    /// Acceptance probabilities on the final table.
    pub probs: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct ParRun {
    pub trace: Vec<ParRecord>,
    pub table: OracleTable,
    pub machines: Vec<ParallelMachine>,
    pub advice_row: usize,
    pub iterations: usize,
    pub halt: ParHalt,
}

pub fn promise_string(probs: &[Prob]) -> String {
    probs
        .iter()
        .map(|&p| {
            if p >= Ratio::new(2, 3) {
                '1'
            } else if p <= Ratio::new(1, 3) {
                '0'
            } else {
                '-'
            }
        })
        .collect()
}

/// Advice bits agree with every promised column.
pub fn promise_holds(promise: &str, row_bits: &BitString) -> bool {
    promise.chars().zip(row_bits.bits()).all(|(c, &b)| match c {
        '1' => b,
        '0' => !b,
        _ => true,
    })
}

/// Mean-progress lower bound `(1 - ε)W + 1/6 - ε`.
pub fn mean_lower_bound(w: Prob, eps: SignedProb) -> SignedProb {
    (SignedProb::from_integer(1) - eps) * signed(w) + Ratio::new(1, 6) - eps
}

pub fn run_construction(cfg: &ParConfig) -> Result<ParRun, RunFailure<ParRecord>> {
    let g = cfg.geometry().map_err(RunFailure::bare)?;
    let mut adaptive = Vec::new();
    for (col, spec) in g.adaptive.iter().enumerate() {
        if let Some(m) = spec {
            let equivalent = m.agrees_with(&g.machines[col], &g.table).map_err(RunFailure::bare)?;
            adaptive.push(ExpansionNote { col, depth: m.depth(), queries: g.machines[col].max_queries(), equivalent });
        }
    }
    let machines = g.machines;
    let mut a = g.table;
    let (rows, cols) = (a.rows(), a.cols());
    let d = machines.iter().map(|m| m.path_rows()).max().unwrap_or(0);
    let q_max = machines.iter().map(|m| m.max_queries()).max().unwrap_or(0);
    let floor_count = rows.div_ceil(cols.max(1));
    let wanted = cfg.budgets.candidates.unwrap_or(floor_count).max(1);
    // the fewest candidates any step can have, so the largest ε
    let candidates = wanted.min(floor_count).max(1);
    let wmax = w_max(&machines);
    let eps = Ratio::new((d * q_max) as i64, candidates as i64);
    let floor = Ratio::new(1, 6) - eps * (1 + wmax as i64);
    let iteration_bound = (floor > Ratio::from_integer(0)).then(|| (SignedProb::from_integer(wmax as i64) / floor).to_integer() as u64 + 1);
    let mut trace = vec![ParRecord::Header(ParHeader {
        kind: "adversary-par".into(),
        n: cfg.n,
        rho: cfg.rho,
        rows,
        cols,
        d,
        q_max,
        candidates,
        w_max: wmax,
        eps,
        floor,
        iteration_bound,
        adaptive,
        seed: cfg.seed,
    })];
    let max_iterations = cfg.budgets.max_iterations.unwrap_or(iteration_bound.unwrap_or(4096).min(1 << 16) as usize);
    for iter in 1..=max_iterations {
        let w_before = progress_w(&machines, &a);
        let fail = |trace: &mut Vec<ParRecord>, error: LabError| {
            trace.push(ParRecord::Iteration(ParIteration {
                iter,
                action: ParAction::Stalled,
                rows: vec![],
                busy_pair: None,
                w_before,
                w_after: w_before,
                w_candidates: vec![],
                w_mean: None,
                kill_checks: 0,
                certified: false,
                halt: None,
                reason: Some(error.to_string()),
            }));
            RunFailure { error, trace: std::mem::take(trace) }
        };
        let sens = sensitivity(&machines, &a);
        if let Some(r) = sens.iter().position(|s| s.is_empty()) {
            a = encode_row_round(&a, r, &machines);
            let probs = accept_probs(&machines, &a);
            let promise = promise_string(&probs);
            let row_bits = a.row_bits(r);
            let certified = promise_holds(&promise, &row_bits);
            let halt = ParHalt {
                advice_row: r,
                row_bits,
                promise,
                probs: probs.iter().map(crate::ratio::to_string).collect(),
            };
            trace.push(ParRecord::Iteration(ParIteration {
                iter,
                action: ParAction::Halt,
                rows: vec![r],
                busy_pair: None,
                w_before,
                w_after: progress_w(&machines, &a),
                w_candidates: vec![],
                w_mean: None,
                kill_checks: 0,
                certified,
                halt: Some(halt.clone()),
                reason: None,
            }));
            if !certified {
                let e = LabError::InternalInvariant(format!("advice row {r} disagrees with a promised column"));
                return Err(RunFailure { error: e, trace });
            }
            return Ok(ParRun { trace, table: a, machines, advice_row: r, iterations: iter, halt });
        }
        let mut by_col = vec![Vec::new(); cols];
        for (r, cs) in sens.iter().enumerate() {
            for &c in cs {
                by_col[c].push(r);
            }
        }
        let (busy, sensitive_rows) =
            by_col.into_iter().enumerate().rev().max_by_key(|(_, rs)| rs.len()).expect("at least one column");
        if sensitive_rows.len() < floor_count {
            let e = LabError::InternalInvariant(format!(
                "busiest column sensitive to {} rows, counting bound gives {floor_count}",
                sensitive_rows.len()
            ));
            return Err(fail(&mut trace, e));
        }
        let cand = &sensitive_rows[..wanted.min(sensitive_rows.len())];
        let kill_checks = match check_kill_counts(&machines, &a, cand) {
            Ok(n) => n,
            Err(msg) => return Err(fail(&mut trace, LabError::InternalInvariant(msg))),
        };
        let ws: Vec<Prob> = cand.par_iter().map(|&r| progress_w(&machines, &encode_row_round(&a, r, &machines))).collect();
        let mean = ws.iter().sum::<Prob>() / Ratio::from_integer(ws.len() as u64);
        // argmax, ties to the least candidate
        let best = (0..ws.len()).fold(0, |b, k| if ws[k] > ws[b] { k } else { b });
        let w_after = ws[best];
        if w_after <= w_before {
            let e = LabError::Stalled { iteration: iter, reason: "no candidate increases W".into() };
            return Err(fail(&mut trace, e));
        }
        let inequality = signed(mean) >= mean_lower_bound(w_before, eps);
        let dominance = w_after >= mean;
        trace.push(ParRecord::Iteration(ParIteration {
            iter,
            action: ParAction::Step,
            rows: vec![cand[best]],
            busy_pair: Some(a.pair(busy)),
            w_before,
            w_after,
            w_candidates: ws.iter().map(crate::ratio::to_string).collect(),
            w_mean: Some(mean),
            kill_checks,
            certified: inequality && dominance,
            halt: None,
            reason: None,
        }));
        if !(inequality && dominance) {
            let e = LabError::InternalInvariant(format!("mean-progress inequality fails at iteration {iter}"));
            return Err(RunFailure { error: e, trace });
        }
        a = encode_row_round(&a, cand[best], &machines);
    }
    let e = LabError::Stalled { iteration: max_iterations, reason: "iteration budget exhausted".into() };
    Err(RunFailure { error: e, trace })
}

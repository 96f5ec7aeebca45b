use std::time::Instant;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use serde::Serialize;
use serde_json::Value;

use super::{csv_text, elapsed_ms, typed_records, Outcome, Verification};
use crate::adversary::parallel::construction::{
    mean_lower_bound, promise_holds, promise_string, ParAction, ParHeader, ParIteration, SignedProb,
};
use crate::adversary::parallel::machine::Prob;
use crate::adversary::parallel::{self, ParConfig, ParRecord};
use crate::adversary::pp::construction::{Action, PpHeader, PpIteration};
use crate::adversary::pp::progress::doubling_bound;
use crate::adversary::pp::{self, q_bounds, EncodeMode, PpConfig, PpRecord};
use crate::adversary::RunFailure;
use crate::diag::ceil_log2;

#[derive(Serialize)]
struct PpRow {
    mode: EncodeMode,
    n: usize,
    rho: usize,
    rows: usize,
    cols: usize,
    iterations: usize,
    doublings: usize,
    advice_row: usize,
    advice_bits: usize,
    wall_ms: u64,
}

#[derive(Serialize)]
struct ParRow {
    n: usize,
    rho: usize,
    rows: usize,
    cols: usize,
    iterations: usize,
    advice_row: usize,
    promise: String,
    wall_ms: u64,
}

/// A failure before any record is a configuration problem; later ones are
/// module errors and keep the trace.
fn absorb<R: Serialize>(out: &mut Outcome, failure: RunFailure<R>) -> crate::Result<()> {
    if failure.trace.is_empty() {
        return Err(failure.error);
    }
    for r in &failure.trace {
        out.push(r);
    }
    out.fail(failure.error);
    Ok(())
}

pub(super) fn run_pp(cfg: &PpConfig) -> crate::Result<Outcome> {
    let start = Instant::now();
    let mut out = Outcome::new();
    match pp::run_construction(cfg) {
        Ok(run) => {
            for r in &run.trace {
                out.push(r);
            }
            out.csv = csv_text(&[PpRow {
                mode: cfg.mode,
                n: cfg.n,
                rho: cfg.rho,
                rows: run.table.rows(),
                cols: run.table.cols(),
                iterations: run.iterations,
                doublings: run.doublings,
                advice_row: run.advice_row,
                advice_bits: run.halt.advice_bits,
                wall_ms: elapsed_ms(start),
            }]);
        }
        Err(f) => absorb(&mut out, f)?,
    }
    Ok(out)
}

pub(super) fn run_par(cfg: &ParConfig) -> crate::Result<Outcome> {
    let start = Instant::now();
    let mut out = Outcome::new();
    match parallel::run_construction(cfg) {
        Ok(run) => {
            for r in &run.trace {
                out.push(r);
            }
            out.csv = csv_text(&[ParRow {
                n: cfg.n,
                rho: cfg.rho,
                rows: run.table.rows(),
                cols: run.table.cols(),
                iterations: run.iterations,
                advice_row: run.advice_row,
                promise: run.halt.promise.clone(),
                wall_ms: elapsed_ms(start),
            }]);
        }
        Err(f) => absorb(&mut out, f)?,
    }
    Ok(out)
}

/// The header and the iterations, given how to tell them apart.
fn split<R, H, I>(records: Vec<R>, v: &mut Verification, sort: impl Fn(R) -> Result<H, I>) -> Option<(H, Vec<I>)> {
    let mut it = records.into_iter().map(sort);
    let Some(Ok(header)) = it.next() else {
        v.fail("first record is not a header");
        return None;
    };
    let mut iterations = Vec::new();
    for r in it {
        match r {
            Ok(_) => v.fail("second header"),
            Err(i) => iterations.push(i),
        }
    }
    Some((header, iterations))
}

pub(super) fn verify_pp(lines: &[Value], v: &mut Verification) {
    let records: Vec<PpRecord> = typed_records(lines, v);
    let sort = |r| match r {
        PpRecord::Header(h) => Ok(h),
        PpRecord::Iteration(i) => Err(i),
    };
    let Some((h, iters)) = split::<_, PpHeader, PpIteration>(records, v, sort) else { return };
    let (q_min, q_max) = q_bounds(h.terms, h.levels);
    v.check(h.q_min == q_min && h.q_max == q_max, || "Q bounds do not match the term count and K".to_string());
    let bound = doubling_bound(h.terms, h.levels);
    v.check(h.doubling_bound == bound, || format!("doubling bound {} but the Q range gives {bound}", h.doubling_bound));
    v.check(h.rows == 1 << h.rho, || format!("{} rows for rho = {}", h.rows, h.rho));
    let two = BigRational::from_integer(BigInt::from(2));
    let mut doublings = 0u64;
    let mut encoded = 0u64;
    let mut prev_q: Option<BigRational> = None;
    let mut halted = false;
    for (k, it) in iters.iter().enumerate() {
        let i = it.iter;
        v.check(i == k + 1 && !halted, || format!("iteration {i} out of order or after the halt"));
        for (name, q) in [("Q_before", &it.q_before), ("Q_after", &it.q_after)] {
            v.check(q_min <= *q && *q <= q_max, || format!("iteration {i}: {name} outside [Q_min, Q_max]"));
        }
        if let Some(p) = &prev_q {
            v.check(*p == it.q_before, || format!("iteration {i}: Q_before differs from the previous Q_after"));
        }
        prev_q = Some(it.q_after.clone());
        match it.action {
            Action::Double => {
                doublings += 1;
                encoded += it.rows.len() as u64;
                v.check(it.certified && it.q_after >= &two * &it.q_before, || {
                    format!("iteration {i}: Q_after is not at least 2 Q_before")
                });
                let distinct = it.rows.iter().collect::<std::collections::BTreeSet<_>>().len() == it.rows.len();
                v.check(
                    !it.rows.is_empty() && distinct && it.rows.iter().all(|&r| r < h.rows) && it.busy_pair.is_some(),
                    || format!("iteration {i}: malformed doubling set"),
                );
            }
            Action::Halt => {
                halted = true;
                let Some(halt) = &it.halt else {
                    v.fail(format!("iteration {i}: halt without a halt record"));
                    continue;
                };
                v.check(it.certified && it.rows == [halt.advice_row] && halt.advice_row < h.rows, || {
                    format!("iteration {i}: uncertified or malformed halt")
                });
                v.check(halt.advice_bits == h.rho, || format!("advice of {} bits for rho = {}", halt.advice_bits, h.rho));
                v.check(halt.row_bits.len() == h.cols && halt.outputs.len() == h.cols, || {
                    "advice row or outputs have the wrong width".to_string()
                });
                match h.mode {
                    EncodeMode::Plain | EncodeMode::Timestamp => {
                        v.check(halt.row_bits == halt.outputs, || "advice row disagrees with the machine outputs".to_string())
                    }
                    EncodeMode::Xor => v.check(halt.parity.as_ref() == Some(&halt.outputs), || {
                        "column parities disagree with the machine outputs".to_string()
                    }),
                }
                if h.mode == EncodeMode::Timestamp {
                    let (Some(l), Some(w)) = (&halt.latest_row, h.stamp_width) else {
                        v.fail("timestamp run without a located row or stamp width");
                        continue;
                    };
                    let t_max = if w >= 64 { u64::MAX } else { (1u64 << w) - 1 };
                    let want = 2 * ceil_log2(t_max) as u64 + 1;
                    v.check(l.bound == want && l.queries <= l.bound, || {
                        format!("located the row with {} queries, bound {} (expected {want})", l.queries, l.bound)
                    });
                    v.check(l.row == halt.advice_row && l.stamp == encoded + 1, || {
                        format!("located row {} stamp {}, last encoded row {} stamp {}", l.row, l.stamp, halt.advice_row, encoded + 1)
                    });
                }
            }
            Action::Stalled => v.fail(format!("iteration {i}: stalled: {}", it.reason.as_deref().unwrap_or(""))),
        }
    }
    v.check(doublings <= bound, || format!("{doublings} doublings exceed the bound {bound}"));
    v.check(halted, || "the run never halts".to_string());
}

fn signed(p: Prob) -> SignedProb {
    Ratio::new(*p.numer() as i64, *p.denom() as i64)
}

pub(super) fn verify_par(lines: &[Value], v: &mut Verification) {
    let records: Vec<ParRecord> = typed_records(lines, v);
    let sort = |r| match r {
        ParRecord::Header(h) => Ok(h),
        ParRecord::Iteration(i) => Err(i),
    };
    let Some((h, iters)) = split::<_, ParHeader, ParIteration>(records, v, sort) else { return };
    let zero = SignedProb::from_integer(0);
    let eps = Ratio::new((h.d * h.q_max) as i64, h.candidates.max(1) as i64);
    let floor = Ratio::new(1, 6) - eps * (1 + h.w_max as i64);
    v.check(h.eps == eps && h.floor == floor, || "eps or floor do not follow from d, q_max and the candidate count".to_string());
    let bound = (floor > zero).then(|| (SignedProb::from_integer(h.w_max as i64) / floor).to_integer() as u64 + 1);
    v.check(h.iteration_bound == bound, || "iteration bound does not follow from W_max and the floor".to_string());
    for note in &h.adaptive {
        let most = (1usize << note.depth.min(16)) - 1;
        v.check(note.equivalent && note.queries <= most, || {
            format!("column {}: expansion of a depth-{} strategy asks {} queries or disagrees", note.col, note.depth, note.queries)
        });
    }
    let w_max = Prob::from_integer(h.w_max);
    let mut prev: Option<Prob> = None;
    let mut halted = false;
    for (k, it) in iters.iter().enumerate() {
        let i = it.iter;
        v.check(i == k + 1 && !halted, || format!("iteration {i} out of order or after the halt"));
        v.check(it.w_before <= w_max && it.w_after <= w_max, || format!("iteration {i}: W above W_max"));
        if let Some(p) = prev {
            v.check(p == it.w_before, || format!("iteration {i}: W_before differs from the previous W_after"));
        }
        prev = Some(it.w_after);
        match it.action {
            ParAction::Step => {
                let ws: Option<Vec<Prob>> = it.w_candidates.iter().map(|s| crate::ratio::parse::<u64>(s)).collect();
                let Some(ws) = ws.filter(|w| !w.is_empty()) else {
                    v.fail(format!("iteration {i}: missing or unparsable candidate W values"));
                    continue;
                };
                v.check(ws.len() >= h.candidates, || format!("iteration {i}: {} candidates, fewer than {}", ws.len(), h.candidates));
                let mean = ws.iter().sum::<Prob>() / Prob::from_integer(ws.len() as u64);
                let best = ws.iter().copied().max().expect("nonempty");
                v.check(it.w_mean == Some(mean), || format!("iteration {i}: W_mean is not the candidate mean"));
                v.check(it.w_after == best && best >= mean, || format!("iteration {i}: W_after is not the largest candidate"));
                v.check(it.w_after > it.w_before, || format!("iteration {i}: W does not increase"));
                v.check(signed(mean) >= mean_lower_bound(it.w_before, eps), || {
                    format!("iteration {i}: mean {} below (1 - eps) W + 1/6 - eps", crate::ratio::to_string(&mean))
                });
                if floor > zero {
                    v.check(signed(it.w_after) - signed(it.w_before) >= floor, || format!("iteration {i}: gain below the floor"));
                }
                v.check(it.certified && it.rows.len() == 1 && it.busy_pair.is_some(), || {
                    format!("iteration {i}: uncertified or malformed step")
                });
            }
            ParAction::Halt => {
                halted = true;
                let Some(halt) = &it.halt else {
                    v.fail(format!("iteration {i}: halt without a halt record"));
                    continue;
                };
                let probs: Option<Vec<Prob>> = halt.probs.iter().map(|s| crate::ratio::parse::<u64>(s)).collect();
                let Some(probs) = probs.filter(|p| p.len() == h.cols) else {
                    v.fail(format!("iteration {i}: probabilities missing or of the wrong count"));
                    continue;
                };
                v.check(halt.promise == promise_string(&probs), || "promise string does not follow from the probabilities".to_string());
                v.check(halt.row_bits.len() == h.cols && promise_holds(&halt.promise, &halt.row_bits), || {
                    "advice row disagrees with a promised column".to_string()
                });
                v.check(it.certified && it.rows == [halt.advice_row] && halt.advice_row < h.rows, || {
                    format!("iteration {i}: uncertified or malformed halt")
                });
            }
            ParAction::Stalled => v.fail(format!("iteration {i}: stalled: {}", it.reason.as_deref().unwrap_or(""))),
        }
    }
    if let Some(b) = bound {
        v.check(iters.len() as u64 <= b, || format!("{} iterations exceed the bound {b}", iters.len()));
    }
    v.check(halted, || "the run never halts".to_string());
}

use super::{class_table, enumerate, Circuit, Gate, Op, TruthTable, Wire};
use crate::error::LabError;

/// Per-input requirement for [`lex_first_matching`]: a fixed bit or a wildcard.
pub type Requirement = Option<bool>;

/// Brute-force scan: the first circuit of `enumerate(n, s_max)` whose table
/// agrees with `spec` on every non-wildcard input.
pub fn lex_first_matching(n: usize, s_max: usize, spec: &[Requirement]) -> Option<Circuit> {
    assert_eq!(spec.len(), 1 << n, "spec must have 2^n entries");
    enumerate(n, s_max).find(|c| {
        spec.iter()
            .enumerate()
            .all(|(x, want)| want.is_none_or(|w| c.eval_index(x as u64) == w))
    })
}

/// Least size of a circuit computing `f`, searching sizes up to `s_cap`.
pub fn min_size(f: TruthTable, s_cap: usize) -> Option<usize> {
    (0..=s_cap).find(|&s| class_table(f.n(), s).class_of(f).is_some())
}

/// Gates added by [`majority_compose`] on top of the voters, for `k` voters.
///
/// The vote is a threshold ladder `T[i][j]` = "at least j of the first i
/// votes": `T[i][j] = OR(T[i-1][j], AND(T[i-1][j-1], v_i))`, kept only for
/// `j <= (k+1)/2` and for the `j` that can still reach the threshold. Entries
/// with trivial operands (`T[i-1][0] = 1`, `T[i-1][i] = 0`) cost no gate.
pub fn majority_overhead(k: usize) -> usize {
    ladder_gate_count(k)
}

fn ladder_gate_count(k: usize) -> usize {
    let h = k.div_ceil(2);
    let mut gates = 0;
    for i in 1..=k {
        let lo = (h + i).saturating_sub(k).max(1);
        let hi = i.min(h);
        for j in lo..=hi {
            let and_needed = j > 1;
            let or_needed = j < i;
            gates += and_needed as usize + or_needed as usize;
        }
    }
    gates
}

/// One circuit outputting the pointwise majority of an odd number of voters.
///
/// Size is exactly `Σ size(c_i) + majority_overhead(k)`.
pub fn majority_compose(cs: &[Circuit]) -> Result<Circuit, LabError> {
    let k = cs.len();
    if k.is_multiple_of(2) {
        return Err(LabError::Arity(k));
    }
    let n = cs[0].n();
    if cs.iter().any(|c| c.n() != n) {
        return Err(LabError::Arity(k));
    }
    let mut gates: Vec<Gate> = Vec::new();
    let mut votes = Vec::with_capacity(k);
    for c in cs {
        let base = gates.len();
        let remap = |w: Wire| -> Wire {
            if (w.0 as usize) <= n + 2 {
                w
            } else {
                Wire(w.0 + base as u32)
            }
        };
        for g in c.gates() {
            gates.push(Gate { op: g.op, in1: remap(g.in1), in2: remap(g.in2) });
        }
        votes.push(remap(c.output()));
    }
    let h = k.div_ceil(2);
    let push = |gates: &mut Vec<Gate>, op: Op, a: Wire, b: Wire| -> Wire {
        gates.push(Gate { op, in1: a, in2: b });
        Wire::gate(n, gates.len())
    };
    // prev[j] holds T[i-1][j]; None means the constant 0 (j > i-1)
    let mut prev: Vec<Option<Wire>> = vec![None; h + 1];
    for (idx, &v) in votes.iter().enumerate() {
        let i = idx + 1;
        let lo = (h + i).saturating_sub(k).max(1);
        let hi = i.min(h);
        let mut cur = prev.clone();
        for j in lo..=hi {
            let with_vote = if j == 1 { v } else { push(&mut gates, Op::And, prev[j - 1].expect("T[i-1][j-1] live"), v) };
            cur[j] = Some(match prev[j] {
                Some(keep) if j < i => push(&mut gates, Op::Or, keep, with_vote),
                _ => with_vote,
            });
        }
        prev = cur;
    }
    let out = prev[h].expect("threshold wire");
    Ok(Circuit::new(n, gates, out)?)
}

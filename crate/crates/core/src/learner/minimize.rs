use super::{learn, LearnInstance, LearnMode, LearnerOutput};
use crate::circuit::{min_size, Circuit};
use crate::error::LabError;

/// Learn a smallest equivalent of `c` using only evaluations of `c`.
///
/// Sizes are tried upward from 0; each result is checked against `c` on every
/// input. In parallel mode the first size that succeeds yields the first
/// circuit of that size in encoding order, which is a global minimum in size.
pub fn minimize_blackbox(c: &Circuit, mode: LearnMode, samples: usize, seed: u64) -> crate::Result<LearnerOutput> {
    let table = c.truth_table();
    for s in 0..=c.size() {
        let inst = LearnInstance::new(s, table);
        let out = match learn(&inst, mode, samples, seed) {
            Ok(out) => out,
            Err(LabError::Instance(_)) => continue,
            Err(e) => return Err(e),
        };
        let exact = (0..1u64 << c.n()).all(|x| out.circuit.eval_index(x) == inst.f.query(x));
        if exact {
            return Ok(out);
        }
    }
    Err(LabError::InternalInvariant(format!(
        "no equivalent found up to the input's own size {}",
        c.size()
    )))
}

/// Whether no strictly smaller circuit computes the same function.
pub fn is_minimal(c: &Circuit) -> bool {
    min_size(c.truth_table(), c.size()) == Some(c.size())
}

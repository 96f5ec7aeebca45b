//! A language on which every circuit of a finite class errs early.
//!
//! Inputs are taken in lexicographic order. At each step the next bit is set
//! against the majority of the circuits still correct so far (exactly half
//! counts as a majority accepting, so the bit becomes 0), which at least halves
//! the survivors. After `N = ceil(log2 |C|) + 1` steps none remain.

use serde::{Deserialize, Serialize};

use crate::circuit::{enumerate, Circuit};
use crate::error::LabError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HardLanguage {
    pub n: usize,
    pub s: usize,
    /// Number of inputs decided.
    pub length: usize,
    /// `bits[t]` is membership of input `t` (the inputs in lexicographic order).
    pub bits: Vec<bool>,
    /// `survivors[t] = |C_t|`, circuits correct on the first `t` inputs.
    pub survivors: Vec<u64>,
}

pub fn ceil_log2(v: u64) -> usize {
    if v <= 1 {
        0
    } else {
        (64 - (v - 1).leading_zeros()) as usize
    }
}

/// Diagonalize against an explicit class.
pub fn diagonalize(n: usize, s: usize, class: &[Circuit]) -> crate::Result<HardLanguage> {
    if class.is_empty() {
        return Err(LabError::Geometry("empty circuit class".into()));
    }
    let length = ceil_log2(class.len() as u64) + 1;
    if length > 1 << n {
        return Err(LabError::Geometry(format!(
            "{length} inputs needed to defeat {} circuits, only {} exist at n = {n}",
            class.len(),
            1u64 << n
        )));
    }
    let mut alive: Vec<&Circuit> = class.iter().collect();
    let mut bits = Vec::with_capacity(length);
    let mut survivors = vec![alive.len() as u64];
    for x in 0..length as u64 {
        let accept = alive.iter().filter(|c| c.eval_index(x)).count();
        let bit = 2 * accept < alive.len();
        alive.retain(|c| c.eval_index(x) == bit);
        bits.push(bit);
        survivors.push(alive.len() as u64);
    }
    Ok(HardLanguage { n, s, length, bits, survivors })
}

pub fn build_hard_language(n: usize, s: usize) -> crate::Result<HardLanguage> {
    let class: Vec<Circuit> = enumerate(n, s).collect();
    diagonalize(n, s, &class)
}

/// Every circuit of the class errs somewhere on the decided prefix.
pub fn verify_against(h: &HardLanguage, class: &[Circuit]) -> bool {
    class
        .iter()
        .all(|c| h.bits.iter().enumerate().any(|(x, &b)| c.eval_index(x as u64) != b))
}

pub fn verify_hardness(h: &HardLanguage) -> bool {
    let class: Vec<Circuit> = enumerate(h.n, h.s).collect();
    verify_against(h, &class)
}

/// Each step at least halves the survivors and none remain at the end.
pub fn halving_holds(h: &HardLanguage) -> bool {
    h.survivors.windows(2).all(|w| w[1] <= w[0] / 2) && h.survivors.last() == Some(&0)
}

//! Bounded search for a subset of `0..n` satisfying a predicate.
//!
//! Small ground sets are scanned completely by (weight, lexicographic) order,
//! so the first hit is the least such subset. Larger ones get seeded random
//! starts followed by greedy single-element flips that climb a score.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SubsetBudget {
    /// Ground sets up to this size are searched exhaustively.
    pub exhaustive_cap: usize,
    pub restarts: usize,
    pub greedy_steps: usize,
    pub seed: u64,
}

impl Default for SubsetBudget {
    fn default() -> Self {
        SubsetBudget { exhaustive_cap: 16, restarts: 32, greedy_steps: 64, seed: 0 }
    }
}

/// Outcome of one evaluation: whether the subset qualifies, and a score the
/// greedy phase tries to increase.
pub struct Probe<S> {
    pub hit: bool,
    pub score: S,
}

/// The `w`-subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, w: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if w > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..w).collect();
    loop {
        out.push(idx.clone());
        let Some(i) = (0..w).rev().find(|&i| idx[i] < n - w + i) else {
            return out;
        };
        idx[i] += 1;
        for j in i + 1..w {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Exhaustive scan in (weight, lex) order from `min_weight`; the least hit.
pub fn scan_exhaustive<S, F>(n: usize, min_weight: usize, eval: &F) -> Option<Vec<usize>>
where
    F: Fn(&[usize]) -> Probe<S> + Sync,
{
    (min_weight..=n).find_map(|w| combinations(n, w).into_par_iter().find_first(|y| eval(y).hit))
}

/// Hits first, then higher score, then lower index.
fn rank<S: Ord>(c: &(usize, Probe<S>)) -> (bool, &S, std::cmp::Reverse<usize>) {
    (c.1.hit, &c.1.score, std::cmp::Reverse(c.0))
}

fn members(mask: &[bool]) -> Vec<usize> {
    mask.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect()
}

/// Random restarts plus greedy flips. Deterministic for a fixed seed.
pub fn scan_random<S, F>(n: usize, budget: &SubsetBudget, eval: &F) -> Option<Vec<usize>>
where
    S: Ord + Send,
    F: Fn(&[usize]) -> Probe<S> + Sync,
{
    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
    for _ in 0..budget.restarts {
        let mut mask: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
        let mut here = eval(&members(&mask));
        if here.hit {
            return Some(members(&mask));
        }
        for _ in 0..budget.greedy_steps {
            // best single flip; ties go to the least index
            let best = (0..n)
                .into_par_iter()
                .map(|i| {
                    let mut m = mask.clone();
                    m[i] = !m[i];
                    (i, eval(&members(&m)))
                })
                .reduce_with(|a, b| if rank(&b) > rank(&a) { b } else { a });
            let Some((i, probe)) = best else { break };
            if !probe.hit && probe.score <= here.score {
                break;
            }
            mask[i] = !mask[i];
            here = probe;
            if here.hit {
                return Some(members(&mask));
            }
        }
    }
    None
}

/// Exhaustive when `n <= exhaustive_cap`, random/greedy otherwise.
pub fn find_subset<S, F>(n: usize, min_weight: usize, budget: &SubsetBudget, eval: F) -> Option<Vec<usize>>
where
    S: Ord + Send,
    F: Fn(&[usize]) -> Probe<S> + Sync,
{
    if n <= budget.exhaustive_cap {
        scan_exhaustive(n, min_weight, &eval)
    } else {
        scan_random(n, budget, &eval)
    }
}

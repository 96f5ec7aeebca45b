//! Search for a point where a low-degree multilinear polynomial is much larger
//! than at the origin.
//!
//! A polynomial of degree at most `sqrt(N)/7` that stays within `2/3` of
//! `|p(0)|` on every weight-1 point is known to reach `6·|p(0)|` somewhere.
//! The search below only certifies: a returned point always satisfies the
//! bound, and a failure reports whether those preconditions held.

use serde::{Deserialize, Serialize};

use crate::adversary::subset::{find_subset, Probe, SubsetBudget};
use crate::error::LabError;

pub const MAX_VARS: usize = 20;

/// `Σ coeff · Π_{i in mask} X_i` over `vars` Boolean variables.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultilinearPoly {
    vars: usize,
    terms: Vec<(i64, u32)>,
}

impl MultilinearPoly {
    pub fn new(vars: usize, terms: Vec<(i64, u32)>) -> crate::Result<MultilinearPoly> {
        if vars > MAX_VARS {
            return Err(LabError::Config(format!("{vars} variables, at most {MAX_VARS} supported")));
        }
        if let Some(&(_, m)) = terms.iter().find(|(_, m)| vars < 32 && m >> vars != 0) {
            return Err(LabError::Config(format!("monomial mask {m:#b} outside {vars} variables")));
        }
        Ok(MultilinearPoly { vars, terms })
    }

    pub fn constant(vars: usize, c: i64) -> crate::Result<MultilinearPoly> {
        MultilinearPoly::new(vars, vec![(c, 0)])
    }

    pub fn vars(&self) -> usize {
        self.vars
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().filter(|(c, _)| *c != 0).map(|(_, m)| m.count_ones()).max().unwrap_or(0)
    }

    /// Value at the point whose set coordinates are `x`'s one bits.
    pub fn eval(&self, x: u32) -> i128 {
        self.terms.iter().filter(|(_, m)| m & x == *m).map(|&(c, _)| c as i128).sum()
    }

    pub fn eval_set(&self, xs: &[usize]) -> i128 {
        self.eval(xs.iter().fold(0, |acc, &i| acc | 1 << i))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum AmplifyResult {
    /// A point (as its set coordinates) with `|p(X)| >= 6·|p(0)|`.
    Found { point: Vec<usize> },
    NotFound { precondition: bool },
}

/// Whether `49·deg^2 <= N` and `3·|p(e_i)| <= 2·|p(0)|` for every unit `e_i`.
pub fn precondition_holds(p: &MultilinearPoly) -> bool {
    let deg = p.degree() as usize;
    let origin = p.eval(0).abs();
    49 * deg * deg <= p.vars() && (0..p.vars()).all(|i| 3 * p.eval(1 << i).abs() <= 2 * origin)
}

pub fn ns_search(p: &MultilinearPoly, budget: &SubsetBudget) -> AmplifyResult {
    let origin = p.eval(0).abs();
    let found = find_subset(p.vars(), 0, budget, |xs| {
        let v = p.eval_set(xs).abs();
        Probe { hit: v >= 6 * origin, score: v }
    });
    match found {
        Some(point) => {
            assert!(p.eval_set(&point).abs() >= 6 * origin, "uncertified point");
            AmplifyResult::Found { point }
        }
        None => AmplifyResult::NotFound { precondition: precondition_holds(p) },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_is_not_found_without_precondition() {
        for c in [1, -5, 12] {
            let p = MultilinearPoly::constant(6, c).unwrap();
            assert_eq!(ns_search(&p, &SubsetBudget::default()), AmplifyResult::NotFound { precondition: false });
        }
    }

    #[test]
    fn planted_point_is_found() {
        // p = 1 + 6·X1·X3 over 4 variables: p({1,3}) = 7 = 7·p(0)
        let p = MultilinearPoly::new(4, vec![(1, 0), (6, 0b1010)]).unwrap();
        assert_eq!(ns_search(&p, &SubsetBudget::default()), AmplifyResult::Found { point: vec![1, 3] });
    }

    #[test]
    fn too_many_variables() {
        assert!(MultilinearPoly::new(21, vec![]).is_err());
        assert!(MultilinearPoly::new(3, vec![(1, 0b1000)]).is_err());
    }

    proptest! {
        #[test]
        fn returned_points_are_certified(
            vars in 1usize..=20,
            c0 in -20i64..=20,
            coeffs in proptest::collection::vec(-9i64..=9, 20),
            seed in any::<u64>(),
        ) {
            let mut terms = vec![(c0, 0)];
            terms.extend((0..vars).map(|i| (coeffs[i], 1u32 << i)));
            let p = MultilinearPoly::new(vars, terms).unwrap();
            let budget = SubsetBudget { exhaustive_cap: 12, seed, ..Default::default() };
            if let AmplifyResult::Found { point } = ns_search(&p, &budget) {
                prop_assert!(p.eval_set(&point).abs() >= 6 * p.eval(0).abs());
            }
        }
    }
}

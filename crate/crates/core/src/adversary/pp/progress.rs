//! The multiplicative progress measure.
//!
//! For a machine value `p`, `b in {0,1}` and `0 <= k <= K`:
//!
//! ```text
//! q(p, b, k) = 2^(2k-3) + (2^k + (-1)^b p)^2 = N(p, b, k) / 8,
//! N(p, b, k) = 2^(2k) + 8 (2^k + (-1)^b p)^2,
//! ```
//!
//! and `Q` is the product of `q` over every column, both `b` and every `k`.
//! All `Q` values for one geometry share the denominator `8^terms`, so they
//! are compared through their integer numerators.

use std::collections::HashMap;

use num_bigint::{BigInt, BigUint};
use num_rational::Ratio;
use num_traits::One;

use super::machine::ThresholdMachine;
use crate::adversary::table::OracleTable;

pub type BigRational = Ratio<BigInt>;

/// `8 · q(p, b, k)`.
pub fn term_numerator(p: i64, b: bool, k: u32) -> BigUint {
    let pk = BigInt::one() << k;
    let signed = if b { -BigInt::from(p) } else { BigInt::from(p) };
    let inner = &pk + signed;
    let square = (&inner * &inner).magnitude().clone();
    (BigUint::one() << (2 * k)) + square * 8u32
}

pub fn q_value(p: i64, b: bool, k: u32) -> BigRational {
    Ratio::new(BigInt::from(term_numerator(p, b, k)), BigInt::from(8))
}

pub fn q_term(m: &ThresholdMachine, a: &OracleTable, b: bool, k: u32) -> BigRational {
    q_value(m.value(a), b, k)
}

/// Least `k` with `2^k >= |p|`.
pub fn level_for(p: i64) -> u32 {
    let mag = p.unsigned_abs();
    if mag <= 1 {
        0
    } else {
        64 - (mag - 1).leading_zeros()
    }
}

/// `Q` for one table, as its numerator over `8^terms`, with the per-column
/// machine values it was computed from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProgressQ {
    pub numerator: BigUint,
    pub terms: usize,
    pub values: Vec<i64>,
}

impl ProgressQ {
    pub fn value(&self) -> BigRational {
        let den = BigUint::one() << (3 * self.terms);
        Ratio::new(BigInt::from(self.numerator.clone()), BigInt::from(den))
    }

    /// `self >= factor · other`.
    pub fn at_least(&self, factor: u32, other: &ProgressQ) -> bool {
        self.numerator >= &other.numerator * factor
    }
}

/// Evaluates `Q` for a fixed machine list and `K`, caching the per-column
/// product for each machine value seen.
#[derive(Debug)]
pub struct QEvaluator {
    levels: u32,
    cache: std::sync::Mutex<HashMap<i64, BigUint>>,
}

impl QEvaluator {
    pub fn new(levels: u32) -> QEvaluator {
        QEvaluator { levels, cache: Default::default() }
    }

    pub fn levels(&self) -> u32 {
        self.levels
    }

    /// Terms per column: both signs at every level `0..=K`.
    pub fn terms_per_column(&self) -> usize {
        2 * (self.levels as usize + 1)
    }

    fn column_numerator(&self, p: i64) -> BigUint {
        if let Some(v) = self.cache.lock().expect("cache poisoned").get(&p) {
            return v.clone();
        }
        let mut prod = BigUint::one();
        for k in 0..=self.levels {
            for b in [false, true] {
                prod *= term_numerator(p, b, k);
            }
        }
        self.cache.lock().expect("cache poisoned").insert(p, prod.clone());
        prod
    }

    pub fn from_values(&self, values: Vec<i64>) -> ProgressQ {
        let mut numerator = BigUint::one();
        for &p in &values {
            numerator *= self.column_numerator(p);
        }
        ProgressQ { numerator, terms: values.len() * self.terms_per_column(), values }
    }

    pub fn evaluate(&self, machines: &[ThresholdMachine], a: &OracleTable) -> ProgressQ {
        self.from_values(machines.iter().map(|m| m.value(a)).collect())
    }

    /// `Q / q` for the busy column's `(b, k)` term, up to the shared
    /// denominator (which cancels in every comparison made with it).
    pub fn without_term(&self, q: &ProgressQ, col: usize, b: bool, k: u32) -> BigRational {
        Ratio::new(
            BigInt::from(q.numerator.clone()),
            BigInt::from(term_numerator(q.values[col], b, k)),
        )
    }
}

/// `progress_Q` for a table: the exact product over every term.
pub fn progress_q(machines: &[ThresholdMachine], a: &OracleTable, levels: u32) -> ProgressQ {
    QEvaluator::new(levels).evaluate(machines, a)
}

/// `(1/8)^terms` and `(5 · 2^(2K))^terms`.
pub fn q_bounds(terms: usize, levels: u32) -> (BigRational, BigRational) {
    let lo = Ratio::new(BigInt::one(), BigInt::one() << (3 * terms));
    let per = BigInt::from(5) << (2 * levels as usize);
    let hi = Ratio::from_integer(num_traits::pow(per, terms));
    (lo, hi)
}

/// Largest doubling count `d` with `2^(d - 1) <= Q_max / Q_min`, i.e. the
/// bound `log2(Q_max / Q_min) + 1` rounded down.
pub fn doubling_bound(terms: usize, levels: u32) -> u64 {
    // Q_max / Q_min = (40 · 4^K)^terms
    let ratio = num_traits::pow(BigUint::from(40u32) << (2 * levels as usize), terms);
    ratio.bits() // 2^(bits - 1) <= ratio < 2^bits
}

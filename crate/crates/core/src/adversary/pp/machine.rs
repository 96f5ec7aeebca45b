use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::adversary::table::{Cell, OracleTable};
use crate::error::LabError;

/// `coeff · Π cells` over 0/1 cell values.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Term {
    pub coeff: i64,
    #[serde(default)]
    pub cells: Vec<Cell>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Polynomial {
    /// Normalized: each monomial sorted and duplicate-free, no zero
    /// coefficients, at most one term per monomial.
    Sparse(Vec<Term>),
    /// 3 if the highest set cell has odd (1-based) position, -1 if even, 1 if
    /// none is set.
    OddMaxBit(Vec<Cell>),
}

/// An integer multilinear polynomial over oracle bits that is odd at every
/// point, so never 0. The machine accepts iff the value is at least 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThresholdMachine {
    poly: Polynomial,
    degree: usize,
    magnitude: u64,
}

impl ThresholdMachine {
    /// A sparse polynomial; odd at every point iff its constant term is odd and
    /// every other coefficient is even.
    pub fn sparse(terms: Vec<Term>) -> Result<ThresholdMachine, LabError> {
        let mut merged: BTreeMap<Vec<Cell>, i64> = BTreeMap::new();
        for t in terms {
            let mut cells = t.cells;
            cells.sort();
            cells.dedup();
            *merged.entry(cells).or_default() += t.coeff;
        }
        let terms: Vec<Term> = merged
            .into_iter()
            .filter(|(_, c)| *c != 0)
            .map(|(cells, coeff)| Term { coeff, cells })
            .collect();
        let constant = terms.iter().find(|t| t.cells.is_empty()).map_or(0, |t| t.coeff);
        if constant % 2 == 0 {
            return Err(LabError::Config(format!("constant term {constant} must be odd")));
        }
        if let Some(t) = terms.iter().find(|t| !t.cells.is_empty() && t.coeff % 2 != 0) {
            return Err(LabError::Config(format!("non-constant coefficient {} must be even", t.coeff)));
        }
        let degree = terms.iter().map(|t| t.cells.len()).max().unwrap_or(0);
        let magnitude = terms.iter().map(|t| t.coeff.unsigned_abs()).sum();
        Ok(ThresholdMachine { poly: Polynomial::Sparse(terms), degree, magnitude })
    }

    pub fn constant(value: i64) -> Result<ThresholdMachine, LabError> {
        ThresholdMachine::sparse(vec![Term { coeff: value, cells: vec![] }])
    }

    /// `2·A(cell) - 1`: accepts iff the cell is set.
    pub fn dictator(cell: Cell) -> ThresholdMachine {
        ThresholdMachine::sparse(vec![Term { coeff: -1, cells: vec![] }, Term { coeff: 2, cells: vec![cell] }])
            .expect("odd by construction")
    }

    pub fn oddmaxbit(cells: Vec<Cell>) -> ThresholdMachine {
        let degree = cells.len();
        let magnitude = if cells.is_empty() { 1 } else { 3 };
        ThresholdMachine { poly: Polynomial::OddMaxBit(cells), degree, magnitude }
    }

    /// Replace the computed bounds by declared ones, which must not be smaller.
    pub fn with_bounds(mut self, degree: Option<usize>, magnitude: Option<u64>) -> Result<Self, LabError> {
        if let Some(d) = degree {
            if d < self.degree {
                return Err(LabError::Config(format!("declared degree {d} below true degree {}", self.degree)));
            }
            self.degree = d;
        }
        if let Some(m) = magnitude {
            if m < self.magnitude {
                return Err(LabError::Config(format!(
                    "declared magnitude {m} below the bound {}",
                    self.magnitude
                )));
            }
            self.magnitude = m;
        }
        Ok(self)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Upper bound on `|p|` over all tables.
    pub fn magnitude(&self) -> u64 {
        self.magnitude
    }

    pub fn cells(&self) -> Vec<Cell> {
        let mut cells: Vec<Cell> = match &self.poly {
            Polynomial::Sparse(terms) => terms.iter().flat_map(|t| t.cells.iter().copied()).collect(),
            Polynomial::OddMaxBit(cells) => cells.clone(),
        };
        cells.sort();
        cells.dedup();
        cells
    }

    pub fn value(&self, a: &OracleTable) -> i64 {
        match &self.poly {
            Polynomial::Sparse(terms) => terms
                .iter()
                .filter(|t| t.cells.iter().all(|&c| a.get(c)))
                .map(|t| t.coeff)
                .sum(),
            Polynomial::OddMaxBit(cells) => match cells.iter().rposition(|&c| a.get(c)) {
                None => 1,
                Some(i) if i % 2 == 0 => 3,
                Some(_) => -1,
            },
        }
    }

    pub fn output(&self, a: &OracleTable) -> bool {
        self.value(a) >= 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cell(row: usize, col: usize) -> Cell {
        Cell::Main { row, col }
    }

    #[test]
    fn constants_and_dictator() {
        let a = OracleTable::new(2, 1, 1, 0);
        assert!(ThresholdMachine::constant(1).unwrap().output(&a));
        assert!(!ThresholdMachine::constant(-3).unwrap().output(&a));
        assert!(ThresholdMachine::constant(2).is_err());
        let d = ThresholdMachine::dictator(cell(1, 0));
        assert_eq!(d.value(&a), -1);
        let mut b = a.clone();
        b.set(cell(1, 0), true);
        assert!(d.output(&b));
    }

    #[test]
    fn oddmaxbit_values() {
        let mut a = OracleTable::new(2, 0, 1, 0);
        let m = ThresholdMachine::oddmaxbit(vec![cell(0, 0), cell(1, 0), cell(2, 0)]);
        assert_eq!(m.value(&a), 1);
        a.set(cell(0, 0), true);
        assert_eq!(m.value(&a), 3);
        assert!(m.output(&a));
        a.set(cell(1, 0), true);
        assert_eq!(m.value(&a), -1);
        a.set(cell(2, 0), true);
        assert_eq!(m.value(&a), 3);
    }

    #[test]
    fn sparse_normalizes_and_checks_oddness() {
        let c = cell(0, 0);
        let m = ThresholdMachine::sparse(vec![
            Term { coeff: 1, cells: vec![] },
            Term { coeff: 2, cells: vec![c, c] },
            Term { coeff: -2, cells: vec![c] },
        ])
        .unwrap();
        assert_eq!(m.degree(), 0);
        assert!(ThresholdMachine::sparse(vec![Term { coeff: 1, cells: vec![] }, Term { coeff: 3, cells: vec![c] }]).is_err());
        assert!(m.clone().with_bounds(Some(0), Some(0)).is_err());
        assert_eq!(m.with_bounds(Some(2), Some(4)).unwrap().magnitude(), 4);
    }
}

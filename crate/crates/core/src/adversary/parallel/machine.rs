//! Randomized machines making one round of existential queries.
//!
//! A query is a list of paths; a path is a set of cell reads with expected
//! bits. The query accepts on a table iff some path is consistent with it, and
//! its lexicographically first accepting path is the earliest consistent one.

use std::collections::BTreeSet;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::adversary::table::{Cell, OracleTable};
use crate::error::LabError;

pub type Prob = Ratio<u64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Read {
    pub row: usize,
    pub col: usize,
    pub bit: bool,
}

impl Read {
    pub fn holds(&self, a: &OracleTable) -> bool {
        a.get(Cell::Main { row: self.row, col: self.col }) == self.bit
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Path(pub Vec<Read>);

impl Path {
    pub fn consistent(&self, a: &OracleTable) -> bool {
        self.0.iter().all(|r| r.holds(a))
    }

    pub fn rows(&self) -> BTreeSet<usize> {
        self.0.iter().map(|r| r.row).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NpQuery(pub Vec<Path>);

impl NpQuery {
    pub fn first_accepting(&self, a: &OracleTable) -> Option<usize> {
        self.0.iter().position(|p| p.consistent(a))
    }

    pub fn accepts(&self, a: &OracleTable) -> bool {
        self.first_accepting(a).is_some()
    }
}

/// Behaviour under one random string: the queries, asked together, and the
/// output for each answer vector (query `j`'s answer is bit `j` of the index).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Branch {
    pub queries: Vec<NpQuery>,
    pub outputs: Vec<bool>,
}

impl Branch {
    pub fn answers(&self, a: &OracleTable) -> usize {
        self.queries.iter().enumerate().filter(|(_, q)| q.accepts(a)).fold(0, |acc, (j, _)| acc | 1 << j)
    }

    pub fn output(&self, a: &OracleTable) -> bool {
        self.outputs[self.answers(a)]
    }
}

/// One column's machine: a uniform choice of branch.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParallelMachine(pub Vec<Branch>);

pub const MAX_QUERIES: usize = 16;

impl ParallelMachine {
    pub fn new(branches: Vec<Branch>) -> crate::Result<ParallelMachine> {
        if branches.is_empty() {
            return Err(LabError::Config("a machine needs at least one random string".into()));
        }
        for (z, b) in branches.iter().enumerate() {
            if b.queries.len() > MAX_QUERIES || b.outputs.len() != 1 << b.queries.len() {
                return Err(LabError::Config(format!(
                    "branch {z}: {} queries need an output table of {} bits, got {}",
                    b.queries.len(),
                    1usize << b.queries.len().min(MAX_QUERIES),
                    b.outputs.len()
                )));
            }
        }
        Ok(ParallelMachine(branches))
    }

    pub fn constant(value: bool) -> ParallelMachine {
        ParallelMachine(vec![Branch { queries: vec![], outputs: vec![value] }])
    }

    pub fn randomness(&self) -> usize {
        self.0.len()
    }

    pub fn branches(&self) -> &[Branch] {
        &self.0
    }

    pub fn output(&self, z: usize, a: &OracleTable) -> bool {
        self.0[z].output(a)
    }

    /// `EX_z[M_z(A)]`.
    pub fn accept_prob(&self, a: &OracleTable) -> Prob {
        let yes = self.0.iter().filter(|b| b.output(a)).count();
        Ratio::new(yes as u64, self.randomness() as u64)
    }

    /// Indices of the accepting queries under random string `z`.
    pub fn accepted_queries(&self, z: usize, a: &OracleTable) -> Vec<usize> {
        self.0[z].queries.iter().enumerate().filter(|(_, q)| q.accepts(a)).map(|(j, _)| j).collect()
    }

    /// `EX_z |S_z(A)|`.
    pub fn expected_accepted(&self, a: &OracleTable) -> Prob {
        let total: usize = (0..self.randomness()).map(|z| self.accepted_queries(z, a).len()).sum();
        Ratio::new(total as u64, self.randomness() as u64)
    }

    pub fn max_queries(&self) -> usize {
        self.0.iter().map(|b| b.queries.len()).max().unwrap_or(0)
    }

    pub fn paths(&self) -> impl Iterator<Item = &Path> {
        self.0.iter().flat_map(|b| b.queries.iter().flat_map(|q| q.0.iter()))
    }

    /// Most distinct rows any single path reads.
    pub fn path_rows(&self) -> usize {
        self.paths().map(|p| p.rows().len()).max().unwrap_or(0)
    }

    pub fn path_len(&self) -> usize {
        self.paths().map(|p| p.0.len()).max().unwrap_or(0)
    }

    pub fn cells(&self) -> BTreeSet<(usize, usize)> {
        self.paths().flat_map(|p| p.0.iter().map(|r| (r.row, r.col))).collect()
    }
}

/// An adaptive strategy under one random string: ask a query, then continue
/// on the branch its answer selects.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DecisionTree {
    Leaf(bool),
    Ask { query: NpQuery, reject: Box<DecisionTree>, accept: Box<DecisionTree> },
}

impl DecisionTree {
    pub fn output(&self, a: &OracleTable) -> bool {
        match self {
            DecisionTree::Leaf(v) => *v,
            DecisionTree::Ask { query, reject, accept } => {
                if query.accepts(a) {
                    accept.output(a)
                } else {
                    reject.output(a)
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            DecisionTree::Leaf(_) => 0,
            DecisionTree::Ask { reject, accept, .. } => 1 + reject.depth().max(accept.depth()),
        }
    }

    /// Every query node, breadth first.
    fn nodes(&self) -> Vec<&DecisionTree> {
        let mut out = Vec::new();
        let mut queue = std::collections::VecDeque::from([self]);
        while let Some(t) = queue.pop_front() {
            if let DecisionTree::Ask { reject, accept, .. } = t {
                out.push(t);
                queue.push_back(reject);
                queue.push_back(accept);
            }
        }
        out
    }

    /// The same strategy with all queries asked up front: every query node
    /// of the tree (at most `2^depth - 1` of them) becomes one parallel
    /// query, and the output table replays the tree on each answer vector.
    pub fn expand(&self) -> Branch {
        let nodes = self.nodes();
        let index = |t: &DecisionTree| nodes.iter().position(|&u| std::ptr::eq(u, t)).expect("node listed");
        let queries = nodes
            .iter()
            .map(|t| match t {
                DecisionTree::Ask { query, .. } => query.clone(),
                DecisionTree::Leaf(_) => unreachable!("only query nodes are listed"),
            })
            .collect::<Vec<_>>();
        let outputs = (0..1usize << queries.len())
            .map(|answers| {
                let mut t = self;
                loop {
                    match t {
                        DecisionTree::Leaf(v) => break *v,
                        DecisionTree::Ask { reject, accept, .. } => {
                            t = if answers >> index(t) & 1 == 1 { accept } else { reject };
                        }
                    }
                }
            })
            .collect();
        Branch { queries, outputs }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AdaptiveMachine(pub Vec<DecisionTree>);

impl AdaptiveMachine {
    pub fn accept_prob(&self, a: &OracleTable) -> Prob {
        let yes = self.0.iter().filter(|t| t.output(a)).count();
        Ratio::new(yes as u64, self.0.len() as u64)
    }

    pub fn depth(&self) -> usize {
        self.0.iter().map(|t| t.depth()).max().unwrap_or(0)
    }

    pub fn expand(&self) -> crate::Result<ParallelMachine> {
        ParallelMachine::new(self.0.iter().map(|t| t.expand()).collect())
    }

    /// Every cell some query of the strategy reads.
    pub fn cells(&self) -> BTreeSet<(usize, usize)> {
        let mut out = BTreeSet::new();
        let mut stack: Vec<&DecisionTree> = self.0.iter().collect();
        while let Some(t) = stack.pop() {
            if let DecisionTree::Ask { query, reject, accept } = t {
                out.extend(query.0.iter().flat_map(|p| p.0.iter().map(|r| (r.row, r.col))));
                stack.push(reject);
                stack.push(accept);
            }
        }
        out
    }

    /// Whether `expanded` accepts with the same probability as the strategy on
    /// every assignment to the cells either reads, the rest taken from `base`.
    pub fn agrees_with(&self, expanded: &ParallelMachine, base: &OracleTable) -> crate::Result<bool> {
        let cells: Vec<_> = self.cells().union(&expanded.cells()).copied().collect();
        if cells.len() > MAX_CHECKED_CELLS {
            return Err(LabError::Config(format!(
                "{} cells read, equivalence is checked exhaustively up to {MAX_CHECKED_CELLS}",
                cells.len()
            )));
        }
        let mut a = base.clone();
        Ok((0u64..1 << cells.len()).all(|mask| {
            for (k, &(row, col)) in cells.iter().enumerate() {
                a.set(Cell::Main { row, col }, mask >> k & 1 == 1);
            }
            self.accept_prob(&a) == expanded.accept_prob(&a)
        }))
    }
}

pub const MAX_CHECKED_CELLS: usize = 20;

#[cfg(test)]
mod tests {
    use super::*;

    fn read(row: usize, col: usize, bit: bool) -> Read {
        Read { row, col, bit }
    }

    #[test]
    fn constant_and_empty_query() {
        let a = OracleTable::new(1, 0, 1, 0);
        assert_eq!(ParallelMachine::constant(true).accept_prob(&a), Ratio::from_integer(1));
        // one query with no paths never accepts; output read at answer 0
        let m = ParallelMachine::new(vec![Branch { queries: vec![NpQuery(vec![])], outputs: vec![true, false] }]).unwrap();
        assert!(m.accepted_queries(0, &a).is_empty());
        assert_eq!(m.accept_prob(&a), Ratio::from_integer(1));
    }

    #[test]
    fn output_table_must_match_query_count() {
        let b = Branch { queries: vec![NpQuery(vec![])], outputs: vec![true] };
        assert!(ParallelMachine::new(vec![b]).is_err());
        assert!(ParallelMachine::new(vec![]).is_err());
    }

    #[test]
    fn lex_first_path() {
        let mut a = OracleTable::new(1, 0, 1, 0);
        let q = NpQuery(vec![Path(vec![read(0, 0, true)]), Path(vec![read(1, 0, false)]), Path(vec![])]);
        assert_eq!(q.first_accepting(&a), Some(1));
        a.set(Cell::Main { row: 1, col: 0 }, true);
        assert_eq!(q.first_accepting(&a), Some(2));
    }

    #[test]
    fn two_query_tree_expands_to_three_queries() {
        let ask = |row, reject, accept| DecisionTree::Ask {
            query: NpQuery(vec![Path(vec![read(row, 0, true)])]),
            reject: Box::new(reject),
            accept: Box::new(accept),
        };
        let tree = ask(0, ask(1, DecisionTree::Leaf(false), DecisionTree::Leaf(true)), ask(2, DecisionTree::Leaf(true), DecisionTree::Leaf(false)));
        let flat = tree.expand();
        assert_eq!(tree.depth(), 2);
        assert_eq!(flat.queries.len(), 3);
        for bits in 0..8u8 {
            let mut a = OracleTable::new(2, 0, 1, 0);
            for r in 0..3 {
                a.set(Cell::Main { row: r, col: 0 }, bits >> r & 1 == 1);
            }
            assert_eq!(flat.output(&a), tree.output(&a));
        }
        let m = AdaptiveMachine(vec![tree]);
        let base = OracleTable::new(2, 0, 1, 0);
        assert!(m.agrees_with(&m.expand().unwrap(), &base).unwrap());
        assert!(!m.agrees_with(&ParallelMachine::constant(true), &base).unwrap());
    }
}

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::machine::{AdaptiveMachine, Branch, NpQuery, ParallelMachine, Path, Read};
use crate::adversary::table::OracleTable;
use crate::error::LabError;

/// A machine `i`, giving one randomized query machine per input `x`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ParFamily {
    Constant { value: bool },
    /// Random string `z` asks whether cell `rows[z]` of column `(source, x)`
    /// is set and outputs the answer, flipped if `negate`.
    ProbeRows {
        rows: Vec<usize>,
        #[serde(default)]
        negate: bool,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        source: Option<usize>,
    },
    /// One random string asking whether any row of column `(source, x)` is
    /// set, one path per row; outputs the answer, flipped if `negate`.
    ExistsRow {
        source: usize,
        #[serde(default)]
        negate: bool,
    },
    /// Explicit machines, one per input `x`.
    Explicit { per_input: Vec<ParallelMachine> },
    /// Adaptive strategies, one per input `x`, run after expansion into
    /// parallel queries.
    Adaptive { per_input: Vec<AdaptiveMachine> },
    /// Random branches, each with `queries` queries of `paths` paths that read
    /// `path_len` random cells, and a random output table.
    Random { randomness: usize, queries: usize, paths: usize, path_len: usize, seed: u64 },
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParBudgets {
    /// Candidate rows per step; defaults to `ceil(rows / cols)`.
    pub candidates: Option<usize>,
    pub max_iterations: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParConfig {
    pub n: usize,
    pub rho: usize,
    pub machines: Vec<ParFamily>,
    /// Most cells a path may read; defaults to the longest path present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path_budget: Option<usize>,
    #[serde(default)]
    pub budgets: ParBudgets,
    #[serde(default)]
    pub seed: u64,
}

pub const MAX_RHO: usize = 10;
pub const MAX_N: usize = 4;

#[derive(Debug, Clone)]
pub struct ParGeometry {
    pub table: OracleTable,
    pub machines: Vec<ParallelMachine>,
    /// The adaptive machine a column was expanded from, if any.
    pub adaptive: Vec<Option<AdaptiveMachine>>,
    pub path_budget: usize,
}

fn probe(row: usize, col: usize) -> NpQuery {
    NpQuery(vec![Path(vec![Read { row, col, bit: true }])])
}

impl ParFamily {
    fn per_input<T: Clone>(list: &[T], t: &OracleTable, i: usize, x: u64) -> crate::Result<T> {
        if list.len() != 1 << t.n() {
            return Err(LabError::Config(format!("machine {i} lists {} inputs, expected {}", list.len(), 1u64 << t.n())));
        }
        Ok(list[x as usize].clone())
    }

    fn build(&self, t: &OracleTable, i: usize, x: u64) -> crate::Result<(ParallelMachine, Option<AdaptiveMachine>)> {
        let rows = t.rows();
        Ok(match self {
            ParFamily::Constant { value } => (ParallelMachine::constant(*value), None),
            ParFamily::ProbeRows { rows: probed, negate, source } => {
                let source = source.unwrap_or(i);
                if !(1..=t.machines()).contains(&source) {
                    return Err(LabError::Config(format!("probe source {source} is not a machine")));
                }
                let col = t.column(source, x);
                let branches = probed
                    .iter()
                    .map(|&r| Branch { queries: vec![probe(r, col)], outputs: vec![*negate, !*negate] })
                    .collect();
                (ParallelMachine::new(branches)?, None)
            }
            ParFamily::ExistsRow { source, negate } => {
                if !(1..=t.machines()).contains(source) {
                    return Err(LabError::Config(format!("exists-row source {source} is not a machine")));
                }
                let col = t.column(*source, x);
                let query = NpQuery((0..rows).map(|row| Path(vec![Read { row, col, bit: true }])).collect());
                (ParallelMachine::new(vec![Branch { queries: vec![query], outputs: vec![*negate, !*negate] }])?, None)
            }
            ParFamily::Explicit { per_input } => {
                let m = Self::per_input(per_input, t, i, x)?;
                (ParallelMachine::new(m.0)?, None)
            }
            ParFamily::Adaptive { per_input } => {
                let m = Self::per_input(per_input, t, i, x)?;
                (m.expand()?, Some(m))
            }
            ParFamily::Random { randomness, queries, paths, path_len, seed } => {
                let col = t.column(i, x) as u64;
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ col.wrapping_mul(0x9e37_79b9_7f4a_7c15));
                let branches = (0..*randomness)
                    .map(|_| {
                        let qs = (0..*queries)
                            .map(|_| {
                                NpQuery(
                                    (0..*paths)
                                        .map(|_| {
                                            Path(
                                                (0..*path_len)
                                                    .map(|_| Read {
                                                        row: rng.gen_range(0..rows),
                                                        col: rng.gen_range(0..t.cols()),
                                                        bit: rng.gen_bool(0.5),
                                                    })
                                                    .collect(),
                                            )
                                        })
                                        .collect(),
                                )
                            })
                            .collect();
                        let outputs = (0..1usize << queries).map(|_| rng.gen_bool(0.5)).collect();
                        Branch { queries: qs, outputs }
                    })
                    .collect();
                (ParallelMachine::new(branches)?, None)
            }
        })
    }
}

impl ParConfig {
    pub fn from_json(text: &str) -> crate::Result<ParConfig> {
        serde_json::from_str(text).map_err(|e| LabError::Config(e.to_string()))
    }

    pub fn geometry(&self) -> crate::Result<ParGeometry> {
        if self.rho > MAX_RHO || self.n > MAX_N {
            return Err(LabError::Config(format!(
                "rho = {} and n = {} must be at most {MAX_RHO} and {MAX_N}",
                self.rho, self.n
            )));
        }
        let table = OracleTable::new(self.rho, self.n, self.machines.len(), 0);
        let mut machines = Vec::new();
        let mut adaptive = Vec::new();
        for (i, fam) in self.machines.iter().enumerate() {
            for x in 0..1u64 << self.n {
                let (m, spec) = fam.build(&table, i + 1, x)?;
                if let Some(&(r, c)) = m.cells().iter().find(|&&(r, c)| r >= table.rows() || c >= table.cols()) {
                    return Err(LabError::Config(format!("machine {} reads cell ({r}, {c}), outside the table", i + 1)));
                }
                machines.push(m);
                adaptive.push(spec);
            }
        }
        let longest = machines.iter().map(|m| m.path_len()).max().unwrap_or(0);
        let path_budget = self.path_budget.unwrap_or(longest);
        if longest > path_budget {
            return Err(LabError::Config(format!("a path reads {longest} cells, budget is {path_budget}")));
        }
        Ok(ParGeometry { table, machines, adaptive, path_budget })
    }
}

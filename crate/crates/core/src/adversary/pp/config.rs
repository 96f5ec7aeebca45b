use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::machine::{Term, ThresholdMachine};
use super::progress::level_for;
use crate::adversary::subset::SubsetBudget;
use crate::adversary::table::{Cell, OracleTable};
use crate::error::LabError;

/// How a row is written when it is encoded.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EncodeMode {
    /// The cell takes the machine output.
    #[default]
    Plain,
    /// As plain, and the row's stamp records the encoding time.
    Timestamp,
    /// The cell is chosen so the column's parity equals the machine output.
    Xor,
}

impl std::str::FromStr for EncodeMode {
    type Err = LabError;

    fn from_str(s: &str) -> crate::Result<EncodeMode> {
        match s {
            "plain" => Ok(EncodeMode::Plain),
            "timestamp" => Ok(EncodeMode::Timestamp),
            "xor" => Ok(EncodeMode::Xor),
            _ => Err(LabError::Config(format!("unknown mode {s:?} (plain, timestamp, xor)"))),
        }
    }
}

impl std::fmt::Display for EncodeMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EncodeMode::Plain => "plain",
            EncodeMode::Timestamp => "timestamp",
            EncodeMode::Xor => "xor",
        })
    }
}

/// A machine `i`, giving one threshold polynomial per input `x`. "Own column"
/// below means column `(i, x)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum MachineFamily {
    Constant { value: i64 },
    /// Accepts iff the cell of `row` in column `(source, x)` is set; the
    /// source machine defaults to this one.
    Dictator {
        row: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        source: Option<usize>,
    },
    /// `1 - 2 · (number of set cells in the own column)`.
    ColumnSum,
    /// Odd-max-bit over the own column, rows taken in the cyclic order
    /// starting at `offset + x · stride`.
    #[serde(rename = "oddmaxbit")]
    OddMaxBit {
        #[serde(default)]
        offset: usize,
        #[serde(default)]
        stride: usize,
    },
    /// Explicit polynomials, one per input `x`.
    Sparse { polys: Vec<Vec<Term>> },
    /// Random odd polynomials: constant ±1 plus `terms` monomials of degree at
    /// most `max_degree` over arbitrary main cells, coefficients in {±2, ±4}.
    Random { terms: usize, max_degree: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MachineSpec {
    #[serde(flatten)]
    pub family: MachineFamily,
    /// Declared bounds, at least the computed ones.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degree: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub magnitude: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PpBudgets {
    /// Defaults to the doubling bound plus the halting iteration.
    pub max_iterations: Option<usize>,
    /// Candidate rows per doubling step; defaults to `ceil(rows / cols)`.
    pub candidates: Option<usize>,
    /// Candidate sets up to this size are searched exhaustively.
    pub exhaustive_cap: Option<usize>,
    pub restarts: Option<usize>,
    pub greedy_steps: Option<usize>,
}

impl PpBudgets {
    /// Search budget for one doubling step, seeded per iteration.
    pub fn search(&self, seed: u64) -> SubsetBudget {
        let d = SubsetBudget::default();
        SubsetBudget {
            exhaustive_cap: self.exhaustive_cap.unwrap_or(d.exhaustive_cap),
            restarts: self.restarts.unwrap_or(d.restarts),
            greedy_steps: self.greedy_steps.unwrap_or(d.greedy_steps),
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PpConfig {
    pub n: usize,
    pub rho: usize,
    /// Levels `0..=K` of the progress product; defaults to the least `K` with
    /// `2^K` at least every machine's magnitude.
    #[serde(rename = "K", default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<u32>,
    pub machines: Vec<MachineSpec>,
    #[serde(default)]
    pub budgets: PpBudgets,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub mode: EncodeMode,
    /// Stamp bits per row in timestamp mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stamp_width: Option<usize>,
}

pub const MAX_RHO: usize = 12;
pub const MAX_N: usize = 6;
pub const MAX_CELLS: usize = 1 << 16;

/// A validated configuration: the empty table, one machine per column and `K`.
#[derive(Debug, Clone)]
pub struct Geometry {
    pub table: OracleTable,
    pub machines: Vec<ThresholdMachine>,
    pub levels: u32,
}

fn own(row: usize, col: usize) -> Cell {
    Cell::Main { row, col }
}

impl MachineSpec {
    fn build(&self, t: &OracleTable, i: usize, x: u64) -> crate::Result<ThresholdMachine> {
        let col = t.column(i, x);
        let rows = t.rows();
        let m = match &self.family {
            MachineFamily::Constant { value } => ThresholdMachine::constant(*value)?,
            MachineFamily::Dictator { row, source } => {
                let source = source.unwrap_or(i);
                if *row >= rows || !(1..=t.machines()).contains(&source) {
                    return Err(LabError::Config(format!("dictator cell ({row}, {source}) outside the table")));
                }
                ThresholdMachine::dictator(own(*row, t.column(source, x)))
            }
            MachineFamily::ColumnSum => {
                let mut terms = vec![Term { coeff: 1, cells: vec![] }];
                terms.extend((0..rows).map(|r| Term { coeff: -2, cells: vec![own(r, col)] }));
                ThresholdMachine::sparse(terms)?
            }
            MachineFamily::OddMaxBit { offset, stride } => {
                let start = offset + x as usize * stride;
                ThresholdMachine::oddmaxbit((0..rows).map(|j| own((start + j) % rows, col)).collect())
            }
            MachineFamily::Sparse { polys } => {
                if polys.len() != 1 << t.n() {
                    return Err(LabError::Config(format!(
                        "sparse machine {i} lists {} polynomials, expected {}",
                        polys.len(),
                        1u64 << t.n()
                    )));
                }
                let terms = polys[x as usize].clone();
                if let Some(c) = terms.iter().flat_map(|t| &t.cells).find(|&&c| !t.contains(c)) {
                    return Err(LabError::Config(format!("machine {i} reads {c:?}, outside the table")));
                }
                ThresholdMachine::sparse(terms)?
            }
            MachineFamily::Random { terms, max_degree, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (col as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
                let mut poly = vec![Term { coeff: if rng.gen_bool(0.5) { 1 } else { -1 }, cells: vec![] }];
                for _ in 0..*terms {
                    let d = rng.gen_range(1..=(*max_degree).max(1));
                    let cells = (0..d).map(|_| own(rng.gen_range(0..rows), rng.gen_range(0..t.cols()))).collect();
                    let coeff = [-4, -2, 2, 4][rng.gen_range(0..4)];
                    poly.push(Term { coeff, cells });
                }
                ThresholdMachine::sparse(poly)?
            }
        };
        m.with_bounds(self.degree, self.magnitude)
    }
}

impl PpConfig {
    pub fn from_json(text: &str) -> crate::Result<PpConfig> {
        serde_json::from_str(text).map_err(|e| LabError::Config(e.to_string()))
    }

    pub fn rows(&self) -> usize {
        1 << self.rho
    }

    pub fn cols(&self) -> usize {
        self.machines.len() << self.n
    }

    pub fn geometry(&self) -> crate::Result<Geometry> {
        if self.rho > MAX_RHO || self.n > MAX_N {
            return Err(LabError::Config(format!(
                "rho = {} and n = {} must be at most {MAX_RHO} and {MAX_N}",
                self.rho, self.n
            )));
        }
        if self.rows() * self.cols() > MAX_CELLS {
            return Err(LabError::Config(format!("table of {} cells exceeds {MAX_CELLS}", self.rows() * self.cols())));
        }
        let stamp_width = match self.mode {
            EncodeMode::Timestamp => self.stamp_width.unwrap_or(16),
            _ => 0,
        };
        if self.mode == EncodeMode::Timestamp && !(1..=63).contains(&stamp_width) {
            return Err(LabError::Config(format!("stamp width {stamp_width} outside 1..=63")));
        }
        let table = OracleTable::new(self.rho, self.n, self.machines.len(), stamp_width);
        let mut machines = Vec::with_capacity(table.cols());
        for (i, spec) in self.machines.iter().enumerate() {
            for x in 0..1u64 << self.n {
                let m = spec.build(&table, i + 1, x)?;
                if let Some(c) = m.cells().into_iter().find(|&c| !table.contains(c)) {
                    return Err(LabError::Config(format!("machine {} reads {c:?}, outside the table", i + 1)));
                }
                machines.push(m);
            }
        }
        let needed = machines.iter().map(|m| level_for(m.magnitude() as i64)).max().unwrap_or(0);
        let levels = self.levels.unwrap_or(needed);
        if levels < needed {
            return Err(LabError::Config(format!("K = {levels} but a machine needs 2^K >= its magnitude (K >= {needed})")));
        }
        if levels > 62 {
            return Err(LabError::Config(format!("K = {levels} too large")));
        }
        Ok(Geometry { table, machines, levels })
    }
}

use serde::{Deserialize, Serialize};

use crate::bits::BitString;

/// One oracle bit: a main cell `(row, column)` or bit `bit` of a row's stamp.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Main { row: usize, col: usize },
    Stamp { stamp_row: usize, bit: usize },
}

/// The adversary's world: `2^rho` rows by `machines · 2^n` columns, plus an
/// optional stamp of `stamp_width` bits per row. Column `(i, x)` (machine `i`
/// 1-based, input `x`) has index `(i - 1) · 2^n + x`. All cells start at 0.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct OracleTable {
    rho: usize,
    n: usize,
    machines: usize,
    stamp_width: usize,
    cells: Vec<bool>,
    stamps: Vec<bool>,
}

impl OracleTable {
    pub fn new(rho: usize, n: usize, machines: usize, stamp_width: usize) -> OracleTable {
        let rows = 1usize << rho;
        let cols = machines << n;
        OracleTable {
            rho,
            n,
            machines,
            stamp_width,
            cells: vec![false; rows * cols],
            stamps: vec![false; rows * stamp_width],
        }
    }

    pub fn rho(&self) -> usize {
        self.rho
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn machines(&self) -> usize {
        self.machines
    }

    pub fn rows(&self) -> usize {
        1 << self.rho
    }

    pub fn cols(&self) -> usize {
        self.machines << self.n
    }

    pub fn stamp_width(&self) -> usize {
        self.stamp_width
    }

    pub fn column(&self, machine: usize, x: u64) -> usize {
        ((machine - 1) << self.n) + x as usize
    }

    /// `(machine, x)` for a column index.
    pub fn pair(&self, col: usize) -> (usize, u64) {
        ((col >> self.n) + 1, (col & ((1 << self.n) - 1)) as u64)
    }

    pub fn get(&self, cell: Cell) -> bool {
        match cell {
            Cell::Main { row, col } => self.cells[row * self.cols() + col],
            Cell::Stamp { stamp_row, bit } => self.stamps[stamp_row * self.stamp_width + bit],
        }
    }

    pub fn set(&mut self, cell: Cell, v: bool) {
        let cols = self.cols();
        match cell {
            Cell::Main { row, col } => self.cells[row * cols + col] = v,
            Cell::Stamp { stamp_row, bit } => self.stamps[stamp_row * self.stamp_width + bit] = v,
        }
    }

    pub fn contains(&self, cell: Cell) -> bool {
        match cell {
            Cell::Main { row, col } => row < self.rows() && col < self.cols(),
            Cell::Stamp { stamp_row, bit } => stamp_row < self.rows() && bit < self.stamp_width,
        }
    }

    pub fn row(&self, r: usize) -> &[bool] {
        let cols = self.cols();
        &self.cells[r * cols..(r + 1) * cols]
    }

    pub fn set_row(&mut self, r: usize, bits: &[bool]) {
        let cols = self.cols();
        self.cells[r * cols..(r + 1) * cols].copy_from_slice(bits);
    }

    pub fn row_bits(&self, r: usize) -> BitString {
        BitString::from_bits(self.row(r).to_vec())
    }

    /// The stamp of row `r` as a big-endian integer.
    pub fn stamp(&self, r: usize) -> u64 {
        let w = self.stamp_width;
        self.stamps[r * w..(r + 1) * w].iter().fold(0, |acc, &b| (acc << 1) | b as u64)
    }

    pub fn set_stamp(&mut self, r: usize, value: u64) {
        let w = self.stamp_width;
        for b in 0..w {
            self.stamps[r * w + b] = (value >> (w - 1 - b)) & 1 == 1;
        }
    }

    /// Largest value a stamp can hold.
    pub fn stamp_max(&self) -> u64 {
        if self.stamp_width >= 64 {
            u64::MAX
        } else {
            (1u64 << self.stamp_width) - 1
        }
    }

    /// XOR of column `col` over every row except `skip`.
    pub fn column_parity_except(&self, col: usize, skip: Option<usize>) -> bool {
        (0..self.rows()).filter(|&r| Some(r) != skip).fold(false, |acc, r| acc ^ self.row(r)[col])
    }

    /// Number of main cells at which two tables of the same shape differ.
    pub fn hamming(&self, other: &OracleTable) -> usize {
        self.cells.iter().zip(&other.cells).filter(|(a, b)| a != b).count()
    }
}

impl std::fmt::Debug for OracleTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "OracleTable(rho={}, cols={})", self.rho, self.cols())?;
        for r in 0..self.rows() {
            writeln!(f, "  {r:>4}: {}", self.row_bits(r))?;
        }
        Ok(())
    }
}

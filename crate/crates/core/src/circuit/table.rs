use std::fmt;

use serde::{Deserialize, Serialize};

use super::MAX_INPUTS;

/// The `2^n`-entry table of a Boolean function; bit `x` of the packed word is
/// `f(x)` where `x` is the input's lexicographic index.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TruthTable {
    n: usize,
    bits: u64,
}

impl TruthTable {
    pub fn full_mask(n: usize) -> u64 {
        let len = 1u32 << n;
        if len == 64 {
            u64::MAX
        } else {
            (1u64 << len) - 1
        }
    }

    pub fn from_bits(n: usize, bits: u64) -> TruthTable {
        assert!((1..=MAX_INPUTS).contains(&n), "input count {n} unsupported");
        TruthTable { n, bits: bits & Self::full_mask(n) }
    }

    pub fn from_fn(n: usize, f: impl Fn(u64) -> bool) -> TruthTable {
        let bits = (0..1u64 << n).fold(0u64, |acc, x| acc | ((f(x) as u64) << x));
        TruthTable::from_bits(n, bits)
    }

    pub fn from_slice(bits: &[bool]) -> Option<TruthTable> {
        let n = bits.len().trailing_zeros() as usize;
        if !bits.len().is_power_of_two() || n == 0 || n > MAX_INPUTS {
            return None;
        }
        Some(TruthTable::from_fn(n, |x| bits[x as usize]))
    }

    /// Table of the projection onto input `x_i` (1-based).
    pub fn projection(n: usize, i: usize) -> TruthTable {
        TruthTable::from_fn(n, |x| (x >> (n - i)) & 1 == 1)
    }

    pub fn constant(n: usize, value: bool) -> TruthTable {
        TruthTable::from_bits(n, if value { u64::MAX } else { 0 })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        1 << self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn get(&self, x: u64) -> bool {
        (self.bits >> x) & 1 == 1
    }

    pub fn to_vec(&self) -> Vec<bool> {
        (0..self.len() as u64).map(|x| self.get(x)).collect()
    }

    /// Hex form: the table read as a binary numeral with `f(0)` first, padded
    /// on the left to whole hex digits.
    pub fn to_hex(&self) -> String {
        let len = self.len();
        let digits = len.div_ceil(4);
        let mut value: u128 = 0;
        for x in 0..len as u64 {
            value = (value << 1) | self.get(x) as u128;
        }
        format!("{value:0digits$x}")
    }

    pub fn from_hex(n: usize, hex: &str) -> Option<TruthTable> {
        if !(1..=MAX_INPUTS).contains(&n) {
            return None;
        }
        let hex = hex.trim().trim_start_matches("0x");
        let value = u128::from_str_radix(hex, 16).ok()?;
        let len = 1usize << n;
        if len < 128 && value >> len != 0 {
            return None;
        }
        Some(TruthTable::from_fn(n, |x| (value >> (len as u64 - 1 - x)) & 1 == 1))
    }

    pub fn count_ones(&self) -> u32 {
        self.bits.count_ones()
    }
}

impl fmt::Debug for TruthTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TruthTable(n={}, ", self.n)?;
        for b in self.to_vec() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        write!(f, ")")
    }
}

use std::fmt;

use serde::{Deserialize, Serialize};

/// Fixed-length bit string, most significant bit first.
///
/// The derived `Ord` is lexicographic with `0 < 1`, which for equal lengths
/// coincides with unsigned big-endian comparison.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct BitString(Vec<bool>);

impl BitString {
    pub fn zeros(len: usize) -> Self {
        BitString(vec![false; len])
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        BitString(bits)
    }

    /// The `len`-bit big-endian representation of `value`.
    pub fn from_u64(value: u64, len: usize) -> Self {
        BitString((0..len).map(|i| (value >> (len - 1 - i)) & 1 == 1).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn get(&self, i: usize) -> bool {
        self.0[i]
    }

    pub fn set(&mut self, i: usize, v: bool) {
        self.0[i] = v;
    }

    pub fn push(&mut self, v: bool) {
        self.0.push(v);
    }

    /// Append the `width`-bit big-endian representation of `value`.
    pub fn push_uint(&mut self, value: u64, width: usize) {
        for i in (0..width).rev() {
            self.0.push(i < 64 && (value >> i) & 1 == 1);
        }
    }

    /// Read `width` bits starting at `start` as a big-endian unsigned integer.
    pub fn read_uint(&self, start: usize, width: usize) -> u64 {
        self.0[start..start + width]
            .iter()
            .fold(0u64, |acc, &b| (acc << 1) | b as u64)
    }

    pub fn to_u64(&self) -> u64 {
        self.read_uint(0, self.len())
    }

    pub fn count_ones(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    /// Advance to the next string of the same length in lexicographic order.
    /// Returns `false` (leaving all zeros) after the all-ones string.
    pub fn increment(&mut self) -> bool {
        for b in self.0.iter_mut().rev() {
            if *b {
                *b = false;
            } else {
                *b = true;
                return true;
            }
        }
        false
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString({self})")
    }
}

impl From<BitString> for String {
    fn from(b: BitString) -> String {
        b.to_string()
    }
}

impl TryFrom<String> for BitString {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl std::str::FromStr for BitString {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(format!("invalid bit character {other:?}")),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(BitString)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uint_round_trip() {
        let mut b = BitString::default();
        b.push_uint(5, 3);
        b.push_uint(2, 4);
        assert_eq!(b.to_string(), "1010010");
        assert_eq!(b.read_uint(0, 3), 5);
        assert_eq!(b.read_uint(3, 4), 2);
    }

    #[test]
    fn increment_walks_lex_order() {
        let mut b = BitString::zeros(2);
        let mut seen = vec![b.to_u64()];
        while b.increment() {
            seen.push(b.to_u64());
        }
        assert_eq!(seen, vec![0, 1, 2, 3]);
        assert!(b.bits().iter().all(|&x| !x));
    }

    #[test]
    fn order_is_big_endian() {
        let a = BitString::from_u64(3, 4);
        let b = BitString::from_u64(8, 4);
        assert!(a < b);
    }
}

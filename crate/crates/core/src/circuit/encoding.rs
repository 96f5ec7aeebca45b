use serde::{Deserialize, Serialize};

use super::{Circuit, Gate, Op, Wire};
use crate::bits::BitString;
use crate::error::WellFormednessError;

/// Fixed-length layout for circuits with `n` inputs and at most `s_max` gates.
///
/// ```text
/// [size: w] [gate 1: 2 + 2w] ... [gate s_max: 2 + 2w] [output: w]
/// ```
///
/// with `w = ceil(log2(n + 2 + s_max + 1))`. A gate record is `opcode(2) in1(w) in2(w)`
/// with opcodes AND=01, OR=10, NOT=11; records past the circuit's size are all
/// zero. All fields are big-endian. Because the size field leads, comparing two
/// encodings as unsigned integers orders smaller circuits first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CanonicalEncoding {
    pub n: usize,
    pub s_max: usize,
    pub width: usize,
}

impl CanonicalEncoding {
    pub fn new(n: usize, s_max: usize) -> CanonicalEncoding {
        let values = (n + 2 + s_max + 1) as u64;
        let width = (64 - (values - 1).leading_zeros()) as usize;
        CanonicalEncoding { n, s_max, width: width.max(1) }
    }

    pub fn record_len(&self) -> usize {
        2 + 2 * self.width
    }

    /// Total encoding length in bits; depends only on `(n, s_max)`.
    pub fn len(&self) -> usize {
        self.width + self.s_max * self.record_len() + self.width
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn encode(&self, c: &Circuit) -> Result<BitString, WellFormednessError> {
        if c.n() != self.n {
            return Err(WellFormednessError::InputCount(c.n()));
        }
        if c.size() > self.s_max {
            return Err(WellFormednessError::TooLarge { size: c.size(), max: self.s_max });
        }
        let w = self.width;
        let mut bits = BitString::default();
        bits.push_uint(c.size() as u64, w);
        for g in c.gates() {
            bits.push_uint(g.op.code(), 2);
            bits.push_uint(g.in1.0 as u64, w);
            bits.push_uint(g.in2.0 as u64, w);
        }
        for _ in c.size()..self.s_max {
            bits.push_uint(0, self.record_len());
        }
        bits.push_uint(c.output().0 as u64, w);
        Ok(bits)
    }

    pub fn decode(&self, bits: &BitString) -> Result<Circuit, WellFormednessError> {
        if bits.len() != self.len() {
            return Err(WellFormednessError::EncodingLength { got: bits.len(), want: self.len() });
        }
        let w = self.width;
        let size = bits.read_uint(0, w) as usize;
        if size > self.s_max {
            return Err(WellFormednessError::SizeField { size, max: self.s_max });
        }
        let mut gates = Vec::with_capacity(size);
        for idx in 0..self.s_max {
            let at = w + idx * self.record_len();
            let code = bits.read_uint(at, 2);
            let in1 = bits.read_uint(at + 2, w) as u32;
            let in2 = bits.read_uint(at + 2 + w, w) as u32;
            if idx >= size {
                if code != 0 || in1 != 0 || in2 != 0 {
                    return Err(WellFormednessError::Padding(idx + 1));
                }
                continue;
            }
            let op = Op::from_code(code).ok_or(WellFormednessError::Opcode(idx + 1))?;
            gates.push(Gate { op, in1: Wire(in1), in2: Wire(in2) });
        }
        let output = Wire(bits.read_uint(w + self.s_max * self.record_len(), w) as u32);
        Circuit::new(self.n, gates, output)
    }

    /// The 1-based bit `j` (from the most significant end) of `c`'s encoding.
    pub fn bit(&self, c: &Circuit, j: usize) -> Result<bool, WellFormednessError> {
        Ok(self.encode(c)?.get(j - 1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_lengths() {
        let e = CanonicalEncoding::new(2, 1);
        // values 0..=5 need 3 bits
        assert_eq!(e.width, 3);
        assert_eq!(e.len(), 3 + 8 + 3);
        let e = CanonicalEncoding::new(1, 0);
        assert_eq!(e.width, 2);
        assert_eq!(e.len(), 4);
    }

    #[test]
    fn round_trip_and_bits() {
        let e = CanonicalEncoding::new(2, 2);
        let c = Circuit::new(2, vec![Gate::and(Wire(1), Wire(2))], Wire::gate(2, 1)).unwrap();
        let bits = e.encode(&c).unwrap();
        assert_eq!(e.decode(&bits).unwrap(), c);
        assert_eq!(bits.read_uint(0, e.width), 1);
        assert!(e.bit(&c, e.width).unwrap());
    }

    #[test]
    fn decode_rejects_garbage() {
        let e = CanonicalEncoding::new(1, 1);
        let mut bits = BitString::zeros(e.len());
        // size 0 with null output
        assert!(matches!(e.decode(&bits), Err(WellFormednessError::Output(0))));
        // size 1 with opcode 00
        bits.set(e.width - 1, true);
        assert!(matches!(e.decode(&bits), Err(WellFormednessError::Opcode(1))));
        assert!(e.decode(&BitString::zeros(3)).is_err());
    }

    #[test]
    fn size_field_dominates_order() {
        let e = CanonicalEncoding::new(2, 2);
        let leaf = Circuit::leaf(2, Wire::const1(2)).unwrap();
        let gate = Circuit::new(2, vec![Gate::and(Wire(1), Wire(1))], Wire::gate(2, 1)).unwrap();
        assert!(e.encode(&leaf).unwrap() < e.encode(&gate).unwrap());
    }
}

//! Small Boolean circuits over the basis {AND, OR, NOT} with fan-in at most two.
//!
//! Wires are numbered so that the canonical encoding can store them directly:
//! `0` is the null wire (used only as the second input of NOT), `1..=n` are the
//! inputs `x1..xn`, `n+1` and `n+2` are the constants `0` and `1`, and
//! `n+2+i` is gate `g_i`.

mod class;
mod encoding;
mod enumerate;
mod search;
mod table;
mod text;

pub use class::{class_table, ClassTable, FunctionClass};
pub use encoding::CanonicalEncoding;
pub use enumerate::{enumerate, Enumeration};
pub use search::{
    lex_first_matching, majority_compose, majority_overhead, min_size, Requirement,
};
pub use table::TruthTable;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::WellFormednessError;

/// Largest supported input count; truth tables are stored in a `u64`.
pub const MAX_INPUTS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Wire(pub u32);

impl Wire {
    pub const NULL: Wire = Wire(0);

    pub fn input(i: usize) -> Wire {
        Wire(i as u32)
    }

    pub fn const0(n: usize) -> Wire {
        Wire(n as u32 + 1)
    }

    pub fn const1(n: usize) -> Wire {
        Wire(n as u32 + 2)
    }

    /// Wire carrying gate `g_i` (1-based).
    pub fn gate(n: usize, i: usize) -> Wire {
        Wire((n + 2 + i) as u32)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Op {
    And,
    Or,
    Not,
}

impl Op {
    /// Two-bit opcode; `00` is reserved for absent gate records.
    pub fn code(self) -> u64 {
        match self {
            Op::And => 1,
            Op::Or => 2,
            Op::Not => 3,
        }
    }

    pub fn from_code(code: u64) -> Option<Op> {
        match code {
            1 => Some(Op::And),
            2 => Some(Op::Or),
            3 => Some(Op::Not),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Gate {
    pub op: Op,
    pub in1: Wire,
    pub in2: Wire,
}

impl Gate {
    pub fn and(a: Wire, b: Wire) -> Gate {
        Gate { op: Op::And, in1: a, in2: b }
    }

    pub fn or(a: Wire, b: Wire) -> Gate {
        Gate { op: Op::Or, in1: a, in2: b }
    }

    pub fn not(a: Wire) -> Gate {
        Gate { op: Op::Not, in1: a, in2: Wire::NULL }
    }
}

/// A well-formed circuit. Construction validates; there is no way to hold an
/// ill-formed `Circuit` value.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Circuit {
    n: usize,
    gates: Vec<Gate>,
    output: Wire,
}

impl Circuit {
    pub fn new(n: usize, gates: Vec<Gate>, output: Wire) -> Result<Circuit, WellFormednessError> {
        if n == 0 || n > MAX_INPUTS {
            return Err(WellFormednessError::InputCount(n));
        }
        for (idx, g) in gates.iter().enumerate() {
            let gate_no = idx + 1;
            let limit = (n + 2 + idx) as u32;
            let check = |w: Wire| {
                if w.0 == 0 || w.0 > limit {
                    Err(WellFormednessError::ForwardReference { gate: gate_no, wire: w.0 })
                } else {
                    Ok(())
                }
            };
            check(g.in1)?;
            match g.op {
                Op::Not if g.in2 != Wire::NULL => {
                    return Err(WellFormednessError::NotArity(gate_no))
                }
                Op::Not => {}
                Op::And | Op::Or => check(g.in2)?,
            }
        }
        if output.0 == 0 || output.0 as usize > n + 2 + gates.len() {
            return Err(WellFormednessError::Output(output.0));
        }
        Ok(Circuit { n, gates, output })
    }

    /// Size-0 circuit whose output is a leaf.
    pub fn leaf(n: usize, wire: Wire) -> Result<Circuit, WellFormednessError> {
        Circuit::new(n, Vec::new(), wire)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn size(&self) -> usize {
        self.gates.len()
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn output(&self) -> Wire {
        self.output
    }

    /// Members of the enumerated class: size-0 circuits output a leaf, larger
    /// circuits output their last gate.
    pub fn is_canonical(&self) -> bool {
        match self.gates.len() {
            0 => true,
            s => self.output == Wire::gate(self.n, s),
        }
    }

    pub fn eval(&self, x: &[bool]) -> Result<bool, WellFormednessError> {
        if x.len() != self.n {
            return Err(WellFormednessError::InputLength { got: x.len(), want: self.n });
        }
        let index = x.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64);
        Ok(self.eval_index(index))
    }

    /// Evaluate on the input whose lexicographic index is `x` (x1 is the most
    /// significant bit).
    pub fn eval_index(&self, x: u64) -> bool {
        let n = self.n;
        let mut values = Vec::with_capacity(n + 3 + self.gates.len());
        values.push(false);
        for i in 1..=n {
            values.push((x >> (n - i)) & 1 == 1);
        }
        values.push(false);
        values.push(true);
        for g in &self.gates {
            let a = values[g.in1.0 as usize];
            let v = match g.op {
                Op::And => a && values[g.in2.0 as usize],
                Op::Or => a || values[g.in2.0 as usize],
                Op::Not => !a,
            };
            values.push(v);
        }
        values[self.output.0 as usize]
    }

    /// Bit-parallel evaluation over all `2^n` inputs at once.
    pub fn truth_table(&self) -> TruthTable {
        let n = self.n;
        let full = TruthTable::full_mask(n);
        let mut wires = Vec::with_capacity(n + 3 + self.gates.len());
        wires.push(0u64);
        for i in 1..=n {
            wires.push(TruthTable::projection(n, i).bits());
        }
        wires.push(0);
        wires.push(full);
        for g in &self.gates {
            let a = wires[g.in1.0 as usize];
            let v = match g.op {
                Op::And => a & wires[g.in2.0 as usize],
                Op::Or => a | wires[g.in2.0 as usize],
                Op::Not => !a & full,
            };
            wires.push(v);
        }
        TruthTable::from_bits(n, wires[self.output.0 as usize])
    }

    pub fn wire_name(&self, w: Wire) -> String {
        wire_name(self.n, w)
    }
}

pub(crate) fn wire_name(n: usize, w: Wire) -> String {
    let i = w.0 as usize;
    match i {
        0 => "null".to_string(),
        i if i <= n => format!("x{i}"),
        i if i == n + 1 => "c0".to_string(),
        i if i == n + 2 => "c1".to_string(),
        i => format!("g{}", i - n - 2),
    }
}

impl fmt::Debug for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Circuit[")?;
        for (i, g) in self.gates.iter().enumerate() {
            let op = match g.op {
                Op::And => "AND",
                Op::Or => "OR",
                Op::Not => "NOT",
            };
            write!(f, "g{}={}({}", i + 1, op, self.wire_name(g.in1))?;
            if g.op != Op::Not {
                write!(f, ",{}", self.wire_name(g.in2))?;
            }
            write!(f, ") ")?;
        }
        write!(f, "out={}]", self.wire_name(self.output))
    }
}

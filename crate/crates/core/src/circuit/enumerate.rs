use super::{Circuit, Gate, Wire};

/// Number of distinct records for gate `g_i` with `n` inputs: AND and OR over
/// ordered pairs of the `n + 1 + i` earlier wires, plus NOT over one of them.
pub(crate) fn choices_for_gate(n: usize, i: usize) -> usize {
    let avail = n + 1 + i;
    2 * avail * avail + avail
}

/// The `idx`-th record for gate `g_i` in encoding order.
pub(crate) fn gate_choice(n: usize, i: usize, idx: usize) -> Gate {
    let avail = n + 1 + i;
    let sq = avail * avail;
    if idx < sq {
        Gate::and(Wire((idx / avail + 1) as u32), Wire((idx % avail + 1) as u32))
    } else if idx < 2 * sq {
        let k = idx - sq;
        Gate::or(Wire((k / avail + 1) as u32), Wire((k % avail + 1) as u32))
    } else {
        Gate::not(Wire((idx - 2 * sq + 1) as u32))
    }
}

/// Iterator over the canonical circuits with `n` inputs and at most `s_max`
/// gates, in strictly increasing encoding order.
///
/// Size-0 circuits output one of the `n + 2` leaves; circuits with gates output
/// their last gate. Other well-formed circuits (dangling gates after the output)
/// are skipped: each computes the same function as a smaller canonical circuit.
pub struct Enumeration {
    n: usize,
    s_max: usize,
    size: usize,
    leaf: usize,
    choices: Vec<usize>,
    done: bool,
}

pub fn enumerate(n: usize, s_max: usize) -> Enumeration {
    Enumeration { n, s_max, size: 0, leaf: 0, choices: Vec::new(), done: false }
}

impl Enumeration {
    fn current(&self) -> Circuit {
        let n = self.n;
        if self.size == 0 {
            return Circuit::leaf(n, Wire((self.leaf + 1) as u32)).expect("leaf in range");
        }
        let gates = self
            .choices
            .iter()
            .enumerate()
            .map(|(k, &idx)| gate_choice(n, k + 1, idx))
            .collect();
        Circuit::new(n, gates, Wire::gate(n, self.size)).expect("enumerated circuit is well-formed")
    }

    fn advance(&mut self) {
        let n = self.n;
        if self.size == 0 {
            self.leaf += 1;
            if self.leaf < n + 2 {
                return;
            }
        } else {
            for k in (0..self.size).rev() {
                self.choices[k] += 1;
                if self.choices[k] < choices_for_gate(n, k + 1) {
                    return;
                }
                self.choices[k] = 0;
            }
        }
        self.size += 1;
        self.choices = vec![0; self.size];
        if self.size > self.s_max {
            self.done = true;
        }
    }
}

impl Iterator for Enumeration {
    type Item = Circuit;

    fn next(&mut self) -> Option<Circuit> {
        if self.done {
            return None;
        }
        let c = self.current();
        self.advance();
        Some(c)
    }
}

/// Exact number of canonical circuits with at most `s_max` gates.
#[cfg(test)]
pub(crate) fn class_size(n: usize, s_max: usize) -> u128 {
    let mut total = (n + 2) as u128;
    let mut prod = 1u128;
    for i in 1..=s_max {
        prod *= choices_for_gate(n, i) as u128;
        total += prod;
    }
    total
}

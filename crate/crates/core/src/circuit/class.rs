use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use super::enumerate::{choices_for_gate, gate_choice};
use super::{Circuit, Gate, Op, TruthTable, Wire};

/// All canonical circuits of one function inside a size-bounded class.
#[derive(Debug, Clone)]
pub struct FunctionClass {
    pub table: TruthTable,
    /// Number of canonical circuits computing `table`.
    pub count: u64,
    /// The first of them in encoding order.
    pub first: Circuit,
}

/// The class `enumerate(n, s)` summarized by function: circuits that agree on
/// every input are indistinguishable to any learner, so survivor sets can be
/// tracked as multisets of functions.
#[derive(Debug)]
pub struct ClassTable {
    pub n: usize,
    pub s: usize,
    /// Ordered by each function's first circuit in encoding order.
    pub classes: Vec<FunctionClass>,
    index: HashMap<u64, usize>,
    total: u64,
}

impl ClassTable {
    pub fn build(n: usize, s: usize) -> ClassTable {
        let mut b = Builder { n, classes: Vec::new(), index: HashMap::new(), gates: Vec::new() };
        let full = TruthTable::full_mask(n);
        let mut wires = vec![0u64];
        for i in 1..=n {
            wires.push(TruthTable::projection(n, i).bits());
        }
        wires.push(0);
        wires.push(full);
        for leaf in 1..=n + 2 {
            let c = Circuit::leaf(n, Wire(leaf as u32)).expect("leaf");
            b.record(wires[leaf], 1, || c.clone());
        }
        for size in 1..=s {
            b.descend(&mut wires, size, full);
        }
        let total = b.classes.iter().map(|c| c.count).sum();
        ClassTable { n, s, classes: b.classes, index: b.index, total }
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn class_of(&self, table: TruthTable) -> Option<&FunctionClass> {
        self.index.get(&table.bits()).map(|&i| &self.classes[i])
    }

    pub fn position(&self, table: TruthTable) -> Option<usize> {
        self.index.get(&table.bits()).copied()
    }
}

struct Builder {
    n: usize,
    classes: Vec<FunctionClass>,
    index: HashMap<u64, usize>,
    gates: Vec<Gate>,
}

impl Builder {
    fn record(&mut self, bits: u64, count: u64, first: impl FnOnce() -> Circuit) {
        match self.index.get(&bits) {
            Some(&i) => self.classes[i].count += count,
            None => {
                self.index.insert(bits, self.classes.len());
                self.classes.push(FunctionClass {
                    table: TruthTable::from_bits(self.n, bits),
                    count,
                    first: first(),
                });
            }
        }
    }

    fn descend(&mut self, wires: &mut Vec<u64>, size: usize, full: u64) {
        let n = self.n;
        let gate_no = self.gates.len() + 1;
        let last = gate_no == size;
        for idx in 0..choices_for_gate(n, gate_no) {
            let g = gate_choice(n, gate_no, idx);
            let a = wires[g.in1.0 as usize];
            let v = match g.op {
                Op::And => a & wires[g.in2.0 as usize],
                Op::Or => a | wires[g.in2.0 as usize],
                Op::Not => !a & full,
            };
            self.gates.push(g);
            if last {
                if let Some(&i) = self.index.get(&v) {
                    self.classes[i].count += 1;
                } else {
                    let gates = self.gates.clone();
                    self.record(v, 1, move || {
                        Circuit::new(n, gates, Wire::gate(n, size)).expect("well-formed")
                    });
                }
            } else {
                wires.push(v);
                self.descend(wires, size, full);
                wires.pop();
            }
            self.gates.pop();
        }
    }
}

/// Shared, lazily built class tables keyed by `(n, s)`.
pub fn class_table(n: usize, s: usize) -> Arc<ClassTable> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<OnceLock<Arc<ClassTable>>>>>> =
        OnceLock::new();
    let slot = {
        let mut map = CACHE.get_or_init(Default::default).lock().expect("class cache poisoned");
        map.entry((n, s)).or_default().clone()
    };
    slot.get_or_init(|| Arc::new(ClassTable::build(n, s))).clone()
}

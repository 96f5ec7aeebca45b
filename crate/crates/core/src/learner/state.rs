use std::sync::Arc;

use rand::distributions::WeightedIndex;
use rand::prelude::Distribution;
use rand::Rng;

use crate::circuit::{class_table, Circuit, ClassTable, FunctionClass, TruthTable};

/// The circuits of the size-bounded class that agree with the target on every
/// observed input, tracked as a set of function classes with multiplicities.
#[derive(Debug, Clone)]
pub struct SurvivorState {
    table: Arc<ClassTable>,
    xs: Vec<u64>,
    fx: Vec<bool>,
    alive: Vec<u32>,
    /// `counts[i] = |B(X_i)|`; `counts[0]` is the whole class.
    counts: Vec<u64>,
}

impl SurvivorState {
    pub fn new(n: usize, s: usize) -> SurvivorState {
        SurvivorState::from_table(class_table(n, s))
    }

    pub fn from_table(table: Arc<ClassTable>) -> SurvivorState {
        let alive = (0..table.classes.len() as u32).collect();
        let total = table.total();
        SurvivorState { table, xs: Vec::new(), fx: Vec::new(), alive, counts: vec![total] }
    }

    pub fn n(&self) -> usize {
        self.table.n
    }

    pub fn s(&self) -> usize {
        self.table.s
    }

    pub fn class_table(&self) -> &Arc<ClassTable> {
        &self.table
    }

    pub fn inputs(&self) -> &[u64] {
        &self.xs
    }

    pub fn values(&self) -> &[bool] {
        &self.fx
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// `|B(X)|` for the current input list.
    pub fn total(&self) -> u64 {
        *self.counts.last().expect("counts nonempty")
    }

    pub fn classes(&self) -> impl Iterator<Item = &FunctionClass> + '_ {
        self.alive.iter().map(|&i| &self.table.classes[i as usize])
    }

    /// Survivors that would remain after observing `f(x) = value`.
    pub fn count_after(&self, x: u64, value: bool) -> u64 {
        self.classes().filter(|c| c.table.get(x) == value).map(|c| c.count).sum()
    }

    /// Survivors whose output at `x` differs from `value`.
    pub fn failing(&self, x: u64, value: bool) -> u64 {
        self.total() - self.count_after(x, value)
    }

    pub fn observe(&mut self, x: u64, value: bool) {
        let table = &self.table;
        self.alive.retain(|&i| table.classes[i as usize].table.get(x) == value);
        let total = self.classes().map(|c| c.count).sum();
        self.xs.push(x);
        self.fx.push(value);
        self.counts.push(total);
    }

    /// Strict majority of the survivors at every input; exact ties give 0.
    pub fn majority_table(&self) -> TruthTable {
        let n = self.n();
        let total = self.total();
        TruthTable::from_fn(n, |x| {
            let ones: u64 = self.classes().filter(|c| c.table.get(x)).map(|c| c.count).sum();
            2 * ones > total
        })
    }

    /// One survivor drawn uniformly, represented by its function's first circuit.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<Circuit> {
        let weights: Vec<u64> = self.classes().map(|c| c.count).collect();
        let dist = WeightedIndex::new(&weights).ok()?;
        let idx = self.alive[dist.sample(rng)];
        Some(self.table.classes[idx as usize].first.clone())
    }
}

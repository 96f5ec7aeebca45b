//! Bounded-witness existential decisions: the desk-scale stand-in for an NP
//! oracle. Every query is answered by complete search, so an answer of `false`
//! is a proof that no witness exists.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::circuit::TruthTable;
use crate::error::SearchBudgetError;

/// Longest witness the default exhaustive search will enumerate.
pub const DEFAULT_EXHAUSTIVE_CAP: usize = 24;

/// An existential question "is there a witness `w` of this length with
/// `holds(w)`?".
///
/// `holds` must be deterministic and total. Implementations that know more
/// structure override [`WitnessQuery::search`]; an override must still return
/// the lexicographically least satisfying witness.
pub trait WitnessQuery: Sync {
    fn witness_len(&self) -> usize;

    fn holds(&self, w: &BitString) -> bool;

    fn search(&self, cap: usize) -> Result<Option<BitString>, SearchBudgetError> {
        exhaustive_search(self, cap)
    }
}

/// Scan all witnesses in lexicographic order.
pub fn exhaustive_search<Q: WitnessQuery + ?Sized>(
    q: &Q,
    cap: usize,
) -> Result<Option<BitString>, SearchBudgetError> {
    let len = q.witness_len();
    if len > cap {
        return Err(SearchBudgetError::WitnessLength { len, cap });
    }
    let mut w = BitString::zeros(len);
    loop {
        if q.holds(&w) {
            return Ok(Some(w));
        }
        if !w.increment() {
            return Ok(None);
        }
    }
}

/// A query given by a closure, searched exhaustively.
pub struct FnQuery<F> {
    len: usize,
    pred: F,
}

impl<F: Fn(&BitString) -> bool + Sync> FnQuery<F> {
    pub fn new(len: usize, pred: F) -> Self {
        FnQuery { len, pred }
    }
}

impl<F: Fn(&BitString) -> bool + Sync> WitnessQuery for FnQuery<F> {
    fn witness_len(&self) -> usize {
        self.len
    }

    fn holds(&self, w: &BitString) -> bool {
        (self.pred)(w)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Answer {
    pub accepted: bool,
    pub witness: Option<BitString>,
}

/// Counts of oracle use. `queries` is always the sum of `batch_sizes`.
#[derive(Debug, Default)]
pub struct QueryLedger {
    batches: AtomicU64,
    queries: AtomicU64,
    f_probes: Arc<AtomicU64>,
    batch_sizes: Mutex<Vec<u64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerSnapshot {
    pub batches: u64,
    pub queries: u64,
    pub f_probes: u64,
    pub batch_sizes: Vec<u64>,
}

impl QueryLedger {
    /// A ledger whose `f_probes` reads the given shared counter.
    pub fn with_probe_counter(f_probes: Arc<AtomicU64>) -> Self {
        QueryLedger { f_probes, ..Default::default() }
    }

    fn record_batch(&self, size: usize) {
        let mut sizes = self.batch_sizes.lock().expect("ledger poisoned");
        sizes.push(size as u64);
        self.batches.fetch_add(1, Ordering::SeqCst);
        self.queries.fetch_add(size as u64, Ordering::SeqCst);
    }

    pub fn snapshot(&self) -> LedgerSnapshot {
        let sizes = self.batch_sizes.lock().expect("ledger poisoned");
        LedgerSnapshot {
            batches: self.batches.load(Ordering::SeqCst),
            queries: self.queries.load(Ordering::SeqCst),
            f_probes: self.f_probes.load(Ordering::SeqCst),
            batch_sizes: sizes.clone(),
        }
    }
}

/// The oracle. Each `decide` is one adaptive round; each `decide_batch` is one
/// round regardless of its size.
#[derive(Debug)]
pub struct NpEngine {
    cap: usize,
    ledger: QueryLedger,
}

impl Default for NpEngine {
    fn default() -> Self {
        NpEngine::new(DEFAULT_EXHAUSTIVE_CAP)
    }
}

impl NpEngine {
    pub fn new(cap: usize) -> Self {
        NpEngine { cap, ledger: QueryLedger::default() }
    }

    pub fn with_ledger(cap: usize, ledger: QueryLedger) -> Self {
        NpEngine { cap, ledger }
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn ledger(&self) -> LedgerSnapshot {
        self.ledger.snapshot()
    }

    fn answer(&self, q: &dyn WitnessQuery) -> Result<Answer, SearchBudgetError> {
        let witness = q.search(self.cap)?;
        Ok(Answer { accepted: witness.is_some(), witness })
    }

    pub fn decide(&self, q: &dyn WitnessQuery) -> Result<Answer, SearchBudgetError> {
        let a = self.answer(q)?;
        self.ledger.record_batch(1);
        Ok(a)
    }

    pub fn decide_batch(&self, qs: &[&dyn WitnessQuery]) -> Result<Vec<Answer>, SearchBudgetError> {
        let answers = qs.par_iter().map(|q| self.answer(*q)).collect::<Result<Vec<_>, _>>()?;
        self.ledger.record_batch(qs.len());
        Ok(answers)
    }
}

/// Black-box access to a target function; every evaluation is counted.
#[derive(Debug, Clone)]
pub struct TargetOracle {
    table: TruthTable,
    probes: Arc<AtomicU64>,
}

impl TargetOracle {
    pub fn new(table: TruthTable) -> Self {
        TargetOracle { table, probes: Arc::default() }
    }

    pub fn n(&self) -> usize {
        self.table.n()
    }

    pub fn query(&self, x: u64) -> bool {
        self.probes.fetch_add(1, Ordering::Relaxed);
        self.table.get(x)
    }

    pub fn probes(&self) -> u64 {
        self.probes.load(Ordering::SeqCst)
    }

    pub fn probe_counter(&self) -> Arc<AtomicU64> {
        self.probes.clone()
    }

    /// Read the whole table at the cost of one probe per input.
    pub fn full_table(&self) -> TruthTable {
        TruthTable::from_fn(self.n(), |x| self.query(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{lex_first_matching, CanonicalEncoding};

    fn is_101(w: &BitString) -> bool {
        w.to_string() == "101"
    }

    #[test]
    fn decide_examples() {
        let e = NpEngine::default();
        let a = e.decide(&FnQuery::new(3, is_101)).unwrap();
        assert_eq!(a.witness.unwrap().to_string(), "101");
        let b = e.decide(&FnQuery::new(2, |_: &BitString| false)).unwrap();
        assert!(!b.accepted && b.witness.is_none());
        let l = e.ledger();
        assert_eq!((l.batches, l.queries), (2, 2));
    }

    #[test]
    fn decide_finds_lex_least_and_circuit() {
        let enc = CanonicalEncoding::new(2, 1);
        let and2 = TruthTable::from_bits(2, 0b1000);
        let q = FnQuery::new(enc.len(), |w: &BitString| {
            enc.decode(w).is_ok_and(|c| c.truth_table() == and2)
        });
        let a = NpEngine::default().decide(&q).unwrap();
        let spec: Vec<_> = and2.to_vec().into_iter().map(Some).collect();
        let want = lex_first_matching(2, 1, &spec).unwrap();
        assert_eq!(enc.decode(&a.witness.unwrap()).unwrap(), want);
    }

    #[test]
    fn batch_is_one_round() {
        let e = NpEngine::default();
        let q1 = FnQuery::new(3, is_101);
        let q2 = FnQuery::new(2, |_: &BitString| false);
        let out = e.decide_batch(&[&q1, &q2]).unwrap();
        assert!(out[0].accepted && !out[1].accepted);
        assert_eq!(e.ledger().batches, 1);
        assert!(e.decide_batch(&[]).unwrap().is_empty());
        let l = e.ledger();
        assert_eq!((l.batches, l.queries), (2, 2));
        assert_eq!(l.batch_sizes, vec![2, 0]);
    }

    #[test]
    fn cap_enforced() {
        let e = NpEngine::new(4);
        let err = e.decide(&FnQuery::new(5, |_: &BitString| true)).unwrap_err();
        assert_eq!(err, SearchBudgetError::WitnessLength { len: 5, cap: 4 });
    }

    #[test]
    fn probes_counted_through_ledger() {
        let f = TargetOracle::new(TruthTable::from_bits(2, 0b1000));
        let e = NpEngine::with_ledger(8, QueryLedger::with_probe_counter(f.probe_counter()));
        let q = FnQuery::new(2, |w: &BitString| f.query(w.to_u64()));
        assert_eq!(e.decide(&q).unwrap().witness.unwrap().to_string(), "11");
        assert_eq!(e.ledger().f_probes, 4);
    }

    mod props {
        use proptest::prelude::*;

        use super::*;

        proptest! {
            #[test]
            fn returned_witness_is_least(len in 0usize..8, set in proptest::collection::vec(any::<u8>(), 0..6)) {
                let members: Vec<u64> = set.iter().map(|&v| v as u64 % (1 << len)).collect();
                let q = FnQuery::new(len, |w: &BitString| members.contains(&w.to_u64()));
                let a = NpEngine::default().decide(&q).unwrap();
                prop_assert_eq!(a.witness.map(|w| w.to_u64()), members.iter().copied().min());
            }

            #[test]
            fn batch_permutation_invariant(masks in proptest::collection::vec(0u64..16, 1..6), rot in 0usize..6) {
                let qs: Vec<FnQuery<_>> = masks
                    .iter()
                    .map(|&m| FnQuery::new(4, move |w: &BitString| w.to_u64() & m == m && m != 0))
                    .collect();
                let refs: Vec<&dyn WitnessQuery> = qs.iter().map(|q| q as &dyn WitnessQuery).collect();
                let e = NpEngine::default();
                let base = e.decide_batch(&refs).unwrap();
                let k = rot % refs.len();
                let mut rotated = refs.clone();
                rotated.rotate_left(k);
                let mut again = e.decide_batch(&rotated).unwrap();
                again.rotate_right(k);
                prop_assert_eq!(&base, &again);
                let seq: Vec<Answer> = refs.iter().map(|q| e.decide(*q).unwrap()).collect();
                prop_assert_eq!(&base, &seq);
                let l = e.ledger();
                prop_assert_eq!(l.queries, l.batch_sizes.iter().sum::<u64>());
            }
        }
    }
}

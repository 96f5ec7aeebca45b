//! Exact learning of a black-box function by a size-bounded circuit class.
//!
//! Two strategies share the survivor bookkeeping in [`SurvivorState`]:
//!
//! * [`learn_adaptive`] repeatedly asks the oracle for an input on which at least
//!   a `theta` fraction of the survivors err, observes it, and finally outputs
//!   the majority of sampled survivors.
//! * [`learn_parallel`] asks every question up front in one batch: for each
//!   length `t`, whether some input list shrinks the survivors by a factor 2/3 at
//!   every step, and for each bit position whether the resulting majority
//!   circuit has that bit set. The longest accepting list pins the circuit.
//!
//! Both run on exact counts; there is no sampling inside an oracle query.

mod adaptive;
mod minimize;
mod parallel;
mod state;

pub use adaptive::{adaptive_round_bound, find_hard_input, learn_adaptive};
pub use minimize::{is_minimal, minimize_blackbox};
pub use parallel::{
    at_predicate, learn_nplog, learn_parallel, lex_circuit, max_list_length, qt_accepts, Witness,
};
pub use state::SurvivorState;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, TruthTable};
use crate::np::{LedgerSnapshot, NpEngine, QueryLedger, TargetOracle, DEFAULT_EXHAUSTIVE_CAP};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LearnMode {
    Adaptive,
    Parallel,
    Nplog,
}

impl std::str::FromStr for LearnMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "adaptive" => Ok(LearnMode::Adaptive),
            "parallel" => Ok(LearnMode::Parallel),
            "nplog" => Ok(LearnMode::Nplog),
            _ => Err(format!("unknown mode {s:?}")),
        }
    }
}

/// A target `f` on `n` inputs, to be learned within circuits of size at most `s`.
///
/// Callers assert that some circuit of size at most `s` computes `f`.
#[derive(Debug, Clone)]
pub struct LearnInstance {
    pub n: usize,
    pub s: usize,
    pub f: TargetOracle,
    /// Culling fraction for the adaptive learner, in (0, 1).
    pub theta: Ratio<u64>,
}

impl LearnInstance {
    pub fn new(s: usize, f: TruthTable) -> LearnInstance {
        LearnInstance { n: f.n(), s, f: TargetOracle::new(f), theta: Ratio::new(1, 3) }
    }

    pub fn with_theta(mut self, theta: Ratio<u64>) -> LearnInstance {
        self.theta = theta;
        self
    }

    /// An engine whose ledger counts this instance's target probes.
    pub(crate) fn engine(&self) -> NpEngine {
        NpEngine::with_ledger(
            DEFAULT_EXHAUSTIVE_CAP,
            QueryLedger::with_probe_counter(self.f.probe_counter()),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LearnerOutput {
    pub mode: LearnMode,
    pub n: usize,
    pub s: usize,
    pub circuit: Circuit,
    pub ledger: LedgerSnapshot,
    /// `size(circuit) / s`; absent when `s = 0`.
    #[serde(with = "crate::ratio::option")]
    pub ratio: Option<Ratio<u64>>,
    /// `|B(X_0)|`, the size of the class searched.
    pub class_size: u64,
    /// Adaptive: oracle rounds, including the final one that finds no input.
    pub rounds: u64,
    /// Adaptive: majority samples rejected by verification.
    pub retries: u64,
    /// Parallel and nplog: the longest accepted input-list length.
    pub t_star: Option<usize>,
    /// Nplog: number of positive answers among the parallel queries.
    pub advice: Option<u64>,
    /// Nplog: bits needed to write the advice.
    pub advice_bits: Option<u32>,
}

impl LearnerOutput {
    fn new(mode: LearnMode, inst: &LearnInstance, circuit: Circuit, ledger: LedgerSnapshot, class_size: u64) -> Self {
        let ratio = (inst.s > 0).then(|| Ratio::new(circuit.size() as u64, inst.s as u64));
        LearnerOutput {
            mode,
            n: inst.n,
            s: inst.s,
            circuit,
            ledger,
            ratio,
            class_size,
            rounds: 0,
            retries: 0,
            t_star: None,
            advice: None,
            advice_bits: None,
        }
    }
}

/// Run the selected learner. Adaptive mode uses `samples` voters and `seed`.
pub fn learn(inst: &LearnInstance, mode: LearnMode, samples: usize, seed: u64) -> crate::Result<LearnerOutput> {
    use rand::SeedableRng;
    match mode {
        LearnMode::Adaptive => {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            learn_adaptive(inst, samples, &mut rng)
        }
        LearnMode::Parallel => learn_parallel(inst),
        LearnMode::Nplog => learn_nplog(inst),
    }
}

use std::time::Instant;

use num_rational::Ratio;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{csv_text, elapsed_ms, typed_records, Outcome, Verification};
use crate::circuit::{class_table, min_size, Circuit, TruthTable};
use crate::error::LabError;
use crate::learner::{adaptive_round_bound, learn, LearnInstance, LearnMode, LearnerOutput};

/// Largest size searched when an instance leaves `s` to be found.
pub const MIN_SIZE_CAP: usize = 4;

/// Which target functions to learn.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "select", rename_all = "snake_case")]
pub enum Targets {
    /// All `2^(2^n)` functions.
    All,
    /// Truth tables in hex, most significant input first.
    Tables { tables: Vec<String> },
    /// The functions computed by these circuits.
    Circuits { circuits: Vec<Circuit> },
    /// `count` distinct functions drawn uniformly from those of size at most
    /// `max_size`.
    Random { count: usize, max_size: usize },
}

fn default_theta() -> Ratio<u64> {
    Ratio::new(1, 3)
}

fn default_samples() -> usize {
    5
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnConfig {
    pub n: usize,
    pub mode: LearnMode,
    pub targets: Targets,
    /// Size bound for every instance; defaults to each target's least size.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<usize>,
    #[serde(default = "default_theta", with = "crate::ratio")]
    pub theta: Ratio<u64>,
    /// Adaptive majority voters, odd.
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
}

impl LearnConfig {
    /// The `(table, s)` pairs to learn, in order.
    pub fn instances(&self) -> crate::Result<Vec<(TruthTable, usize)>> {
        let n = self.n;
        if !(1..=crate::circuit::MAX_INPUTS).contains(&n) {
            return Err(LabError::Config(format!("n = {n} outside 1..={}", crate::circuit::MAX_INPUTS)));
        }
        let tables: Vec<TruthTable> = match &self.targets {
            Targets::All => {
                if n > 3 {
                    return Err(LabError::Config(format!("all functions at n = {n} is too many; use random")));
                }
                (0..1u64 << (1 << n)).map(|b| TruthTable::from_bits(n, b)).collect()
            }
            Targets::Tables { tables } => tables
                .iter()
                .map(|h| TruthTable::from_hex(n, h).ok_or_else(|| LabError::Config(format!("bad truth table {h:?}"))))
                .collect::<crate::Result<_>>()?,
            Targets::Circuits { circuits } => {
                if let Some(c) = circuits.iter().find(|c| c.n() != n) {
                    return Err(LabError::Config(format!("circuit over {} inputs, config says {n}", c.n())));
                }
                circuits.iter().map(|c| c.truth_table()).collect()
            }
            Targets::Random { count, max_size } => {
                let classes = &class_table(n, *max_size).classes;
                if *count > classes.len() {
                    return Err(LabError::Config(format!(
                        "{count} distinct functions requested, only {} have size at most {max_size}",
                        classes.len()
                    )));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                sample(&mut rng, classes.len(), *count).into_iter().map(|i| classes[i].table).collect()
            }
        };
        tables
            .into_iter()
            .map(|f| {
                let s = match self.s {
                    Some(s) => s,
                    None => min_size(f, MIN_SIZE_CAP).ok_or_else(|| {
                        LabError::Config(format!("{} needs more than {MIN_SIZE_CAP} gates; give s", f.to_hex()))
                    })?,
                };
                Ok((f, s))
            })
            .collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
enum LearnRecord {
    Header(LearnHeader),
    Instance(Box<InstanceRecord>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct LearnHeader {
    kind: String,
    n: usize,
    mode: LearnMode,
    #[serde(with = "crate::ratio")]
    theta: Ratio<u64>,
    samples: usize,
    seed: u64,
    instances: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct InstanceRecord {
    id: usize,
    table: String,
    /// The output computes the target on every input.
    exact: bool,
    /// Adaptive: the round bound for the class and culling fraction.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    round_bound: Option<u64>,
    #[serde(flatten)]
    output: LearnerOutput,
}

#[derive(Serialize)]
struct Row {
    id: usize,
    n: usize,
    s: usize,
    table: String,
    mode: LearnMode,
    circuit: String,
    size: usize,
    exact: bool,
    batches: u64,
    queries: u64,
    f_probes: u64,
    rounds: u64,
    retries: u64,
    ratio: String,
    wall_ms: u64,
}

pub(super) fn run(cfg: &LearnConfig) -> crate::Result<Outcome> {
    if cfg.samples.is_multiple_of(2) {
        return Err(LabError::Config(format!("samples = {} must be odd", cfg.samples)));
    }
    let (a, b) = (*cfg.theta.numer(), *cfg.theta.denom());
    if a == 0 || a >= b {
        return Err(LabError::Config("theta must lie in (0, 1)".into()));
    }
    let instances = cfg.instances()?;
    let mut out = Outcome::new();
    out.push(&LearnRecord::Header(LearnHeader {
        kind: "learn".into(),
        n: cfg.n,
        mode: cfg.mode,
        theta: cfg.theta,
        samples: cfg.samples,
        seed: cfg.seed,
        instances: instances.len(),
    }));
    let mut rows = Vec::new();
    for (id, (f, s)) in instances.into_iter().enumerate() {
        let start = Instant::now();
        let inst = LearnInstance::new(s, f).with_theta(cfg.theta);
        let result = match learn(&inst, cfg.mode, cfg.samples, cfg.seed.wrapping_add(id as u64)) {
            Ok(r) => r,
            Err(e) => {
                out.fail(e);
                break;
            }
        };
        let exact = result.circuit.truth_table() == f;
        let round_bound = (cfg.mode == LearnMode::Adaptive).then(|| adaptive_round_bound(result.class_size, cfg.theta));
        rows.push(Row {
            id,
            n: cfg.n,
            s,
            table: f.to_hex(),
            mode: cfg.mode,
            circuit: result.circuit.to_string().trim_end().replace('\n', "; "),
            size: result.circuit.size(),
            exact,
            batches: result.ledger.batches,
            queries: result.ledger.queries,
            f_probes: result.ledger.f_probes,
            rounds: result.rounds,
            retries: result.retries,
            ratio: result.ratio.map(|r| crate::ratio::to_string(&r)).unwrap_or_default(),
            wall_ms: elapsed_ms(start),
        });
        out.push(&LearnRecord::Instance(Box::new(InstanceRecord {
            id,
            table: f.to_hex(),
            exact,
            round_bound,
            output: result,
        })));
    }
    out.csv = csv_text(&rows);
    Ok(out)
}

pub(super) fn verify(lines: &[Value], v: &mut Verification) {
    let records: Vec<LearnRecord> = typed_records(lines, v);
    let Some(LearnRecord::Header(h)) = records.first() else {
        v.fail("missing learn header");
        return;
    };
    let instances: Vec<&InstanceRecord> = records
        .iter()
        .filter_map(|r| match r {
            LearnRecord::Instance(i) => Some(&**i),
            LearnRecord::Header(_) => None,
        })
        .collect();
    v.check(instances.len() == h.instances, || format!("{} instances listed, header says {}", instances.len(), h.instances));
    for (k, rec) in instances.iter().enumerate() {
        let o = &rec.output;
        let id = rec.id;
        v.check(id == k, || format!("instance {k} carries id {id}"));
        let Some(f) = TruthTable::from_hex(h.n, &rec.table) else {
            v.fail(format!("instance {id}: bad table {:?}", rec.table));
            continue;
        };
        let table = o.circuit.truth_table();
        v.check(o.mode == h.mode && o.n == h.n, || format!("instance {id}: mode or n differs from the header"));
        v.check(rec.exact && table == f, || format!("instance {id}: output computes {}, target {}", table.to_hex(), rec.table));
        v.check(o.circuit.size() <= o.s || o.mode == LearnMode::Adaptive, || {
            format!("instance {id}: size {} above s = {}", o.circuit.size(), o.s)
        });
        let ratio = (o.s > 0).then(|| Ratio::new(o.circuit.size() as u64, o.s as u64));
        v.check(o.ratio == ratio, || format!("instance {id}: ratio does not match the sizes"));
        let class = class_table(h.n, o.s);
        v.check(o.class_size == class.total(), || {
            format!("instance {id}: class size {} but the class has {}", o.class_size, class.total())
        });
        match o.mode {
            LearnMode::Parallel | LearnMode::Nplog => {
                v.check(o.ledger.batches == 1, || format!("instance {id}: {} oracle batches", o.ledger.batches));
                let first = class.class_of(f).map(|c| &c.first);
                v.check(first == Some(&o.circuit), || format!("instance {id}: output is not the first circuit for the target"));
            }
            LearnMode::Adaptive => {
                let bound = adaptive_round_bound(o.class_size, h.theta);
                v.check(rec.round_bound == Some(bound) && o.rounds <= bound, || {
                    format!("instance {id}: {} rounds, bound {bound}", o.rounds)
                });
            }
        }
    }
}

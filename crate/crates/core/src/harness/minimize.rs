use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{csv_text, elapsed_ms, typed_records, Outcome, Verification};
use crate::circuit::{enumerate, min_size, Circuit};
use crate::error::LabError;
use crate::learner::{is_minimal, minimize_blackbox, LearnMode};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "select", rename_all = "snake_case")]
pub enum MinimizeInputs {
    /// Every circuit of size at most `s`.
    All { s: usize },
    Circuits { circuits: Vec<Circuit> },
}

fn default_samples() -> usize {
    5
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MinimizeConfig {
    pub n: usize,
    pub inputs: MinimizeInputs,
    pub mode: LearnMode,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
enum MinimizeRecord {
    Header { kind: String, n: usize, mode: LearnMode, seed: u64, instances: usize },
    Instance(InstanceRecord),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct InstanceRecord {
    id: usize,
    input: Circuit,
    output: Circuit,
    /// Least size of any circuit for the input's function.
    min_size: usize,
    is_minimal: bool,
    batches: u64,
    queries: u64,
}

#[derive(Serialize)]
struct Row {
    id: usize,
    n: usize,
    table: String,
    input_size: usize,
    output_size: usize,
    min_size: usize,
    is_minimal: bool,
    batches: u64,
    queries: u64,
    wall_ms: u64,
}

pub(super) fn run(cfg: &MinimizeConfig) -> crate::Result<Outcome> {
    let inputs: Vec<Circuit> = match &cfg.inputs {
        MinimizeInputs::All { s } => {
            if !(1..=crate::circuit::MAX_INPUTS).contains(&cfg.n) {
                return Err(LabError::Config(format!("n = {} outside 1..={}", cfg.n, crate::circuit::MAX_INPUTS)));
            }
            enumerate(cfg.n, *s).collect()
        }
        MinimizeInputs::Circuits { circuits } => circuits.clone(),
    };
    if let Some(c) = inputs.iter().find(|c| c.n() != cfg.n) {
        return Err(LabError::Config(format!("circuit over {} inputs, config says {}", c.n(), cfg.n)));
    }
    let mut out = Outcome::new();
    out.push(&MinimizeRecord::Header {
        kind: "minimize".into(),
        n: cfg.n,
        mode: cfg.mode,
        seed: cfg.seed,
        instances: inputs.len(),
    });
    let mut rows = Vec::new();
    for (id, c) in inputs.into_iter().enumerate() {
        let start = Instant::now();
        let result = match minimize_blackbox(&c, cfg.mode, cfg.samples, cfg.seed.wrapping_add(id as u64)) {
            Ok(r) => r,
            Err(e) => {
                out.fail(e);
                break;
            }
        };
        let least = min_size(c.truth_table(), c.size()).expect("the input itself has its own size");
        let rec = InstanceRecord {
            id,
            min_size: least,
            is_minimal: is_minimal(&c),
            batches: result.ledger.batches,
            queries: result.ledger.queries,
            output: result.circuit,
            input: c,
        };
        rows.push(Row {
            id,
            n: cfg.n,
            table: rec.input.truth_table().to_hex(),
            input_size: rec.input.size(),
            output_size: rec.output.size(),
            min_size: rec.min_size,
            is_minimal: rec.is_minimal,
            batches: rec.batches,
            queries: rec.queries,
            wall_ms: elapsed_ms(start),
        });
        out.push(&MinimizeRecord::Instance(rec));
    }
    out.csv = csv_text(&rows);
    Ok(out)
}

pub(super) fn verify(lines: &[Value], v: &mut Verification) {
    let records: Vec<MinimizeRecord> = typed_records(lines, v);
    let Some(MinimizeRecord::Header { instances, mode, .. }) = records.first() else {
        v.fail("missing minimize header");
        return;
    };
    let listed: Vec<&InstanceRecord> = records
        .iter()
        .filter_map(|r| match r {
            MinimizeRecord::Instance(i) => Some(i),
            MinimizeRecord::Header { .. } => None,
        })
        .collect();
    v.check(listed.len() == *instances, || format!("{} instances listed, header says {instances}", listed.len()));
    for rec in listed {
        let id = rec.id;
        let f = rec.input.truth_table();
        v.check(rec.output.truth_table() == f, || format!("instance {id}: output computes a different function"));
        let least = min_size(f, rec.input.size());
        v.check(least == Some(rec.min_size), || format!("instance {id}: recorded least size {} is wrong", rec.min_size));
        if *mode != LearnMode::Adaptive {
            v.check(rec.output.size() == rec.min_size, || {
                format!("instance {id}: output size {} but least size {}", rec.output.size(), rec.min_size)
            });
        }
        v.check(rec.is_minimal == (rec.input.size() == rec.min_size), || {
            format!("instance {id}: minimality flag disagrees with the least size")
        });
    }
}

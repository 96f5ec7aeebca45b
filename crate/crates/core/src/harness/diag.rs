use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{csv_text, elapsed_ms, typed_records, Outcome, Verification};
use crate::bits::BitString;
use crate::circuit::{enumerate, Circuit};
use crate::diag::{ceil_log2, diagonalize, halving_holds, verify_against};
use crate::error::LabError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagConfig {
    pub n: usize,
    pub s: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
enum DiagRecord {
    Header { kind: String, n: usize, s: usize, class_size: u64, length: usize },
    /// Input `t` decided as `bit`, leaving `alive_after` of `alive_before`.
    Step { t: usize, bit: bool, alive_before: u64, alive_after: u64 },
    Final { bits: BitString, halving: bool, hard: bool },
}

#[derive(Serialize)]
struct Row {
    n: usize,
    s: usize,
    class_size: u64,
    length: usize,
    bits: String,
    halving: bool,
    hard: bool,
    wall_ms: u64,
}

pub(super) fn run(cfg: &DiagConfig) -> crate::Result<Outcome> {
    if !(1..=crate::circuit::MAX_INPUTS).contains(&cfg.n) {
        return Err(LabError::Config(format!("n = {} outside 1..={}", cfg.n, crate::circuit::MAX_INPUTS)));
    }
    let start = Instant::now();
    let class: Vec<Circuit> = enumerate(cfg.n, cfg.s).collect();
    let mut out = Outcome::new();
    let length = ceil_log2(class.len() as u64) + 1;
    out.push(&DiagRecord::Header {
        kind: "diagonalize".into(),
        n: cfg.n,
        s: cfg.s,
        class_size: class.len() as u64,
        length,
    });
    let h = match diagonalize(cfg.n, cfg.s, &class) {
        Ok(h) => h,
        Err(e) => {
            out.fail(e);
            return Ok(out);
        }
    };
    for (t, &bit) in h.bits.iter().enumerate() {
        out.push(&DiagRecord::Step { t, bit, alive_before: h.survivors[t], alive_after: h.survivors[t + 1] });
    }
    let bits = BitString::from_bits(h.bits.clone());
    let (halving, hard) = (halving_holds(&h), verify_against(&h, &class));
    out.push(&DiagRecord::Final { bits: bits.clone(), halving, hard });
    out.csv = csv_text(&[Row {
        n: h.n,
        s: h.s,
        class_size: class.len() as u64,
        length: h.length,
        bits: bits.to_string(),
        halving,
        hard,
        wall_ms: elapsed_ms(start),
    }]);
    Ok(out)
}

pub(super) fn verify(lines: &[Value], v: &mut Verification) {
    let records: Vec<DiagRecord> = typed_records(lines, v);
    let Some(&DiagRecord::Header { n, s, class_size, length, .. }) = records.first() else {
        v.fail("missing diagonalize header");
        return;
    };
    if !(1..=crate::circuit::MAX_INPUTS).contains(&n) {
        v.fail(format!("n = {n} outside the supported range"));
        return;
    }
    let class: Vec<Circuit> = enumerate(n, s).collect();
    v.check(class_size == class.len() as u64, || format!("class size {class_size}, enumeration gives {}", class.len()));
    v.check(length == ceil_log2(class_size) + 1, || format!("length {length} is not ceil(log2 {class_size}) + 1"));
    let mut alive: Vec<&Circuit> = class.iter().collect();
    let mut bits = Vec::new();
    let mut final_seen = false;
    for r in &records[1..] {
        match *r {
            DiagRecord::Step { t, bit, alive_before, alive_after } => {
                v.check(t == bits.len(), || format!("step {t} out of order"));
                v.check(alive_before == alive.len() as u64, || format!("step {t}: {alive_before} survivors, replay has {}", alive.len()));
                alive.retain(|c| c.eval_index(t as u64) == bit);
                v.check(alive_after == alive.len() as u64, || format!("step {t}: {alive_after} survivors, replay has {}", alive.len()));
                v.check(2 * alive_after <= alive_before, || format!("step {t}: {alive_before} -> {alive_after} is not a halving"));
                bits.push(bit);
            }
            DiagRecord::Final { bits: ref listed, halving, hard } => {
                final_seen = true;
                v.check(listed.bits() == bits.as_slice(), || "final bits differ from the steps".to_string());
                v.check(bits.len() == length, || format!("{} inputs decided, length {length}", bits.len()));
                v.check(alive.is_empty() && halving, || format!("{} circuits survive the last step", alive.len()));
                let errs_early = class
                    .iter()
                    .all(|c| bits.iter().enumerate().any(|(x, &b)| c.eval_index(x as u64) != b));
                v.check(errs_early && hard, || "some circuit agrees with every decided bit".to_string());
            }
            DiagRecord::Header { .. } => v.fail("second header"),
        }
    }
    v.check(final_seen, || "no final record".to_string());
}

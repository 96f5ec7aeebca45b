use std::time::Instant;

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{csv_text, elapsed_ms, typed_records, Outcome, Verification};
use crate::count::{exact_count, gap_decide, Verdict, COUNT_CAP, POWER};
use crate::error::LabError;

/// Repeated gap decisions on planted sets `{0, ..., S - 1}` of `m`-bit strings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CountConfig {
    pub m: usize,
    pub threshold: u64,
    /// Planted set sizes `S`.
    pub planted: Vec<u64>,
    /// Decisions per planted size.
    pub trials: usize,
    #[serde(with = "crate::ratio")]
    pub delta: Ratio<u64>,
    #[serde(default)]
    pub seed: u64,
}

/// The verdict the promise fixes for a planted size, if the size satisfies it.
pub fn promised(planted: u64, threshold: u64) -> Option<Verdict> {
    let (s, t) = (planted as u128, threshold as u128);
    if 3 * s <= 2 * t {
        Some(Verdict::Low)
    } else if 4 * s >= 3 * t {
        Some(Verdict::High)
    } else {
        None
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
enum CountRecord {
    Header {
        kind: String,
        m: usize,
        threshold: u64,
        #[serde(with = "crate::ratio")]
        delta: Ratio<u64>,
        power: u32,
        trials: usize,
        seed: u64,
    },
    Trial {
        planted: u64,
        trial: usize,
        /// Exact size of the planted set.
        exact: u64,
        expected: Option<Verdict>,
        verdict: Verdict,
        /// Hashing repetitions behind the verdict, 0 when counted directly.
        repetitions: u32,
    },
    Summary {
        planted: u64,
        expected: Option<Verdict>,
        runs: usize,
        errors: usize,
        #[serde(with = "crate::ratio")]
        error_rate: Ratio<u64>,
        /// `error_rate <= delta`, or the size lies outside the promise.
        within: bool,
    },
}

#[derive(Serialize)]
struct Row {
    planted: u64,
    threshold: u64,
    expected: String,
    runs: usize,
    errors: usize,
    error_rate: String,
    delta: String,
    wall_ms: u64,
}

pub(super) fn run(cfg: &CountConfig) -> crate::Result<Outcome> {
    if cfg.m > COUNT_CAP || cfg.m == 0 {
        return Err(LabError::Config(format!("m = {} outside 1..={COUNT_CAP}", cfg.m)));
    }
    if let Some(&s) = cfg.planted.iter().find(|&&s| s > 1 << cfg.m) {
        return Err(LabError::Config(format!("planted size {s} exceeds 2^{}", cfg.m)));
    }
    if cfg.threshold == 0 || cfg.trials == 0 || *cfg.delta.numer() == 0 || cfg.delta >= Ratio::from_integer(1) {
        return Err(LabError::Config("threshold and trials must be positive, delta in (0, 1)".into()));
    }
    let mut out = Outcome::new();
    out.push(&CountRecord::Header {
        kind: "count".into(),
        m: cfg.m,
        threshold: cfg.threshold,
        delta: cfg.delta,
        power: POWER,
        trials: cfg.trials,
        seed: cfg.seed,
    });
    let mut root = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut rows = Vec::new();
    for &planted in &cfg.planted {
        let start = Instant::now();
        let member = move |w: u64| w < planted;
        let exact = exact_count(member, cfg.m)?;
        let expected = promised(exact, cfg.threshold);
        let seeds: Vec<u64> = (0..cfg.trials).map(|_| root.gen()).collect();
        let verdicts = seeds
            .par_iter()
            .map(|&seed| gap_decide(member, cfg.m, cfg.threshold, cfg.delta, &mut ChaCha8Rng::seed_from_u64(seed)))
            .collect::<Result<Vec<_>, _>>();
        let verdicts = match verdicts {
            Ok(v) => v,
            Err(e) => {
                out.fail(e.into());
                break;
            }
        };
        for (trial, g) in verdicts.iter().enumerate() {
            out.push(&CountRecord::Trial {
                planted,
                trial,
                exact,
                expected,
                verdict: g.verdict,
                repetitions: g.trials,
            });
        }
        let errors = verdicts.iter().filter(|g| expected.is_some_and(|e| e != g.verdict)).count();
        let error_rate = Ratio::new(errors as u64, cfg.trials as u64);
        out.push(&CountRecord::Summary {
            planted,
            expected,
            runs: cfg.trials,
            errors,
            error_rate,
            within: error_rate <= cfg.delta,
        });
        rows.push(Row {
            planted,
            threshold: cfg.threshold,
            expected: expected.map(|e| format!("{e:?}")).unwrap_or_else(|| "-".into()),
            runs: cfg.trials,
            errors,
            error_rate: crate::ratio::to_string(&error_rate),
            delta: crate::ratio::to_string(&cfg.delta),
            wall_ms: elapsed_ms(start),
        });
    }
    out.csv = csv_text(&rows);
    Ok(out)
}

pub(super) fn verify(lines: &[Value], v: &mut Verification) {
    let records: Vec<CountRecord> = typed_records(lines, v);
    let Some(&CountRecord::Header { m, threshold, delta, trials, .. }) = records.first() else {
        v.fail("missing count header");
        return;
    };
    let mut pending: Vec<(u64, Option<Verdict>, Verdict)> = Vec::new();
    for r in &records[1..] {
        match *r {
            CountRecord::Trial { planted, trial, exact, expected, verdict, .. } => {
                v.check(trial == pending.len(), || format!("planted {planted}: trial {trial} out of order"));
                let truth = planted.min(1 << m.min(63));
                v.check(exact == truth, || format!("planted {planted}: exact count {exact}, set has {truth}"));
                v.check(expected == promised(truth, threshold), || format!("planted {planted}: wrong expected verdict"));
                pending.push((planted, expected, verdict));
            }
            CountRecord::Summary { planted, expected, runs, errors, error_rate, within } => {
                let mine: Vec<_> = std::mem::take(&mut pending);
                v.check(runs == trials && mine.len() == runs, || format!("planted {planted}: {} trials listed, {runs} claimed", mine.len()));
                v.check(mine.iter().all(|t| t.0 == planted && t.1 == expected), || {
                    format!("planted {planted}: trials belong to another size")
                });
                let wrong = mine.iter().filter(|t| t.1.is_some_and(|e| e != t.2)).count();
                v.check(wrong == errors, || format!("planted {planted}: {wrong} errors, {errors} claimed"));
                let rate = Ratio::new(wrong as u64, runs.max(1) as u64);
                v.check(rate == error_rate && within == (rate <= delta), || format!("planted {planted}: error rate misreported"));
                v.check(rate <= delta, || {
                    format!("planted {planted}: error rate {} above {}", crate::ratio::to_string(&rate), crate::ratio::to_string(&delta))
                });
            }
            CountRecord::Header { .. } => v.fail("second header"),
        }
    }
    v.check(pending.is_empty(), || "trials without a summary".to_string());
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn promise_sides() {
        assert_eq!(promised(0, 9), Some(Verdict::Low));
        assert_eq!(promised(6, 9), Some(Verdict::Low));
        assert_eq!(promised(7, 9), Some(Verdict::High));
        assert_eq!(promised(7, 10), None);
        assert_eq!(promised(16, 16), Some(Verdict::High));
    }
}

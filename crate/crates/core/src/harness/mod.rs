//! Experiment driver: configuration, deterministic traces, CSV summaries and a
//! verifier that re-checks every certified claim from a trace alone.
//!
//! A trace is JSONL. Its first line is a header record carrying `kind`; the
//! remaining lines are the kind's records, optionally ending in an
//! `{"record": "error"}` line when the run stopped early. Traces contain no
//! wall-clock data, so identical configurations give byte-identical traces;
//! timings go to the CSV only.

mod adversary;
mod count;
mod diag;
mod learn;
mod minimize;

use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;

pub use count::CountConfig;
pub use diag::DiagConfig;
pub use learn::{LearnConfig, Targets};
pub use minimize::{MinimizeConfig, MinimizeInputs};

use crate::adversary::parallel::ParConfig;
use crate::adversary::pp::PpConfig;
use crate::error::LabError;

/// One experiment: a subcommand and its parameter record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", content = "config", rename_all = "kebab-case")]
pub enum Experiment {
    Learn(LearnConfig),
    Minimize(MinimizeConfig),
    AdversaryPp(PpConfig),
    AdversaryPar(ParConfig),
    Diagonalize(DiagConfig),
    Count(CountConfig),
}

impl Experiment {
    pub fn from_json(text: &str) -> crate::Result<Experiment> {
        serde_json::from_str(text).map_err(|e| LabError::Config(e.to_string()))
    }

    /// The `kind` written in the trace header.
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::Learn(_) => "learn",
            Experiment::Minimize(_) => "minimize",
            Experiment::AdversaryPp(_) => "adversary-pp",
            Experiment::AdversaryPar(_) => "adversary-par",
            Experiment::Diagonalize(_) => "diagonalize",
            Experiment::Count(_) => "count",
        }
    }

    /// The root seed; diagonalization is seed-free.
    pub fn seed(&self) -> Option<u64> {
        match self {
            Experiment::Learn(c) => Some(c.seed),
            Experiment::Minimize(c) => Some(c.seed),
            Experiment::AdversaryPp(c) => Some(c.seed),
            Experiment::AdversaryPar(c) => Some(c.seed),
            Experiment::Diagonalize(_) => None,
            Experiment::Count(c) => Some(c.seed),
        }
    }

    pub fn set_seed(&mut self, seed: u64) {
        match self {
            Experiment::Learn(c) => c.seed = seed,
            Experiment::Minimize(c) => c.seed = seed,
            Experiment::AdversaryPp(c) => c.seed = seed,
            Experiment::AdversaryPar(c) => c.seed = seed,
            Experiment::Diagonalize(_) => {}
            Experiment::Count(c) => c.seed = seed,
        }
    }
}

/// Trace lines and summary rows built by one run.
pub(crate) struct Outcome {
    pub trace: Vec<String>,
    pub csv: String,
    /// The module error that ended the run early, if any.
    pub error: Option<LabError>,
}

#[derive(Serialize)]
#[serde(tag = "record", rename = "error")]
struct ErrorRecord<'a> {
    message: &'a str,
}

impl Outcome {
    pub fn new() -> Outcome {
        Outcome { trace: Vec::new(), csv: String::new(), error: None }
    }

    pub fn push<T: Serialize>(&mut self, record: &T) {
        self.trace.push(serde_json::to_string(record).expect("trace records serialize"));
    }

    /// Record the error that stops the run; the trace keeps what was written.
    pub fn fail(&mut self, error: LabError) {
        let message = error.to_string();
        self.push(&ErrorRecord { message: &message });
        self.error = Some(error);
    }
}

/// CSV text from serializable rows, header taken from the field names.
pub(crate) fn csv_text<T: Serialize>(rows: &[T]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("csv rows serialize");
    }
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("csv is utf-8")
}

pub(crate) fn elapsed_ms(start: Instant) -> u64 {
    start.elapsed().as_millis() as u64
}

/// The result of [`run`]: trace, summary and the trace's own verification.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub kind: &'static str,
    /// JSONL, one record per line, newline terminated.
    pub trace: String,
    pub csv: String,
    pub verification: Verification,
    /// The module error that ended the run early, if any.
    pub error: Option<String>,
}

impl RunReport {
    /// Every runtime certification passed: the run completed and the
    /// verifier accepts its trace.
    pub fn certified(&self) -> bool {
        self.error.is_none() && self.verification.passed()
    }
}

/// Execute an experiment. Configuration problems are returned as errors;
/// module failures end the run with the trace so far and an error record.
pub fn run(exp: &Experiment) -> crate::Result<RunReport> {
    let outcome = match exp {
        Experiment::Learn(c) => learn::run(c)?,
        Experiment::Minimize(c) => minimize::run(c)?,
        Experiment::AdversaryPp(c) => adversary::run_pp(c)?,
        Experiment::AdversaryPar(c) => adversary::run_par(c)?,
        Experiment::Diagonalize(c) => diag::run(c)?,
        Experiment::Count(c) => count::run(c)?,
    };
    let mut trace = outcome.trace.join("\n");
    trace.push('\n');
    let verification = verify_trace(&trace);
    Ok(RunReport {
        kind: exp.kind(),
        trace,
        csv: outcome.csv,
        verification,
        error: outcome.error.map(|e| e.to_string()),
    })
}

/// Findings of [`verify_trace`].
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Verification {
    pub kind: String,
    pub records: usize,
    /// Individual claims re-checked.
    pub checks: usize,
    pub failures: Vec<String>,
}

impl Verification {
    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.checks > 0
    }

    pub(crate) fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failures.push(what());
        }
    }

    pub(crate) fn fail(&mut self, what: impl Into<String>) {
        self.checks += 1;
        self.failures.push(what.into());
    }
}

/// Parse each line as a typed record, reporting unparsable lines as failures.
/// An error record is reported and dropped.
pub(crate) fn typed_records<T: for<'de> Deserialize<'de>>(lines: &[Value], v: &mut Verification) -> Vec<T> {
    let mut out = Vec::new();
    for (i, line) in lines.iter().enumerate() {
        if line.get("record").and_then(Value::as_str) == Some("error") {
            let msg = line.get("message").and_then(Value::as_str).unwrap_or("");
            v.fail(format!("line {}: run ended with error: {msg}", i + 1));
            continue;
        }
        match T::deserialize(line) {
            Ok(r) => out.push(r),
            Err(e) => v.fail(format!("line {}: {e}", i + 1)),
        }
    }
    out
}

/// Re-check every claim a trace makes, using only the trace (and, where a
/// claim is about a fixed finite object such as a circuit class, a fresh
/// recomputation of that object).
pub fn verify_trace(text: &str) -> Verification {
    let mut v = Verification::default();
    let mut lines = Vec::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        match serde_json::from_str::<Value>(line) {
            Ok(value) => lines.push(value),
            Err(e) => v.fail(format!("line {}: not JSON: {e}", i + 1)),
        }
    }
    v.records = lines.len();
    let Some(kind) = lines.first().and_then(|h| h.get("kind")).and_then(Value::as_str).map(str::to_owned) else {
        v.fail("first line is not a header with a kind");
        return v;
    };
    v.kind = kind.clone();
    match kind.as_str() {
        "learn" => learn::verify(&lines, &mut v),
        "minimize" => minimize::verify(&lines, &mut v),
        "adversary-pp" => adversary::verify_pp(&lines, &mut v),
        "adversary-par" => adversary::verify_par(&lines, &mut v),
        "diagonalize" => diag::verify(&lines, &mut v),
        "count" => count::verify(&lines, &mut v),
        other => v.fail(format!("unknown trace kind {other:?}")),
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn experiment_tagging() {
        let exp = Experiment::from_json(r#"{"command": "diagonalize", "config": {"n": 3, "s": 1}}"#).unwrap();
        assert_eq!(exp.kind(), "diagonalize");
        assert_eq!(exp.seed(), None);
        assert!(Experiment::from_json(r#"{"command": "nope", "config": {}}"#).is_err());
    }

    #[test]
    fn verifier_rejects_garbage() {
        assert!(!verify_trace("").passed());
        assert!(!verify_trace("{\"kind\": \"mystery\"}\n").passed());
        assert!(!verify_trace("not json\n").passed());
    }
}

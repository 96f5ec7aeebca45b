//! C ABI over `oracle_lab`.
//!
//! Every function returns an [`OlabStatus`]; results come back through out
//! pointers, which are written only on success. Circuits are opaque handles
//! owned by the caller and released with [`olab_circuit_free`]. Strings
//! returned by the library are NUL-terminated, owned by the caller and
//! released with [`olab_string_free`]. After a failure,
//! [`olab_last_error_message`] describes it on the calling thread.
//!
//! Panics never cross the boundary: they are caught and reported as
//! `OLAB_ERR_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use oracle_lab::circuit::{Circuit, TruthTable, MAX_INPUTS};
use oracle_lab::error::WellFormednessError;
use oracle_lab::harness::{run, verify_trace, Experiment};
use oracle_lab::learner::{is_minimal, learn, minimize_blackbox, LearnInstance, LearnMode};
use oracle_lab::LabError;

/// Result code of every call.
#[repr(i32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OlabStatus {
    OlabOk = 0,
    /// A required pointer was null.
    OlabErrNull = 1,
    /// A string argument was not UTF-8.
    OlabErrUtf8 = 2,
    /// Malformed circuit text, encoding or JSON.
    OlabErrParse = 3,
    /// An argument is outside its documented range.
    OlabErrArgument = 4,
    /// No circuit of the given size computes the target.
    OlabErrInstance = 5,
    /// The requested geometry does not fit (for example too few inputs to
    /// diagonalize against the class).
    OlabErrGeometry = 6,
    /// A bounded search exceeded its budget.
    OlabErrBudget = 7,
    /// A runtime certification failed inside the library.
    OlabErrInternal = 8,
    OlabErrPanic = 9,
}

/// Learner selection for [`olab_learn`] and [`olab_minimize`].
pub const OLAB_MODE_ADAPTIVE: i32 = 0;
pub const OLAB_MODE_PARALLEL: i32 = 1;
pub const OLAB_MODE_NPLOG: i32 = 2;

/// Opaque circuit handle.
pub struct OlabCircuit(Circuit);

/// Oracle accounting of one learning run.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OlabLearnStats {
    /// NP oracle batches (1 for the one-round learners).
    pub batches: u64,
    pub queries: u64,
    /// Evaluations of the target function.
    pub f_probes: u64,
    /// Adaptive learner rounds, including the last one that finds no input.
    pub rounds: u64,
    /// Adaptive majority candidates rejected by verification.
    pub retries: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Failure(OlabStatus, String);

impl From<LabError> for Failure {
    fn from(e: LabError) -> Failure {
        let status = match &e {
            LabError::WellFormedness(_) | LabError::Json(_) => OlabStatus::OlabErrParse,
            LabError::SearchBudget(_) => OlabStatus::OlabErrBudget,
            LabError::Arity(_) | LabError::Config(_) | LabError::Io(_) => OlabStatus::OlabErrArgument,
            LabError::Instance(_) | LabError::NotFound => OlabStatus::OlabErrInstance,
            LabError::Geometry(_) => OlabStatus::OlabErrGeometry,
            LabError::Stalled { .. } | LabError::InternalInvariant(_) => OlabStatus::OlabErrInternal,
        };
        Failure(status, e.to_string())
    }
}

impl From<WellFormednessError> for Failure {
    fn from(e: WellFormednessError) -> Failure {
        Failure(OlabStatus::OlabErrParse, e.to_string())
    }
}

fn argument(msg: impl Into<String>) -> Failure {
    Failure(OlabStatus::OlabErrArgument, msg.into())
}

/// Run `body`, translating failures and panics into a status.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> OlabStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_error(String::new());
            OlabStatus::OlabOk
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {msg}"));
            OlabStatus::OlabErrPanic
        }
    }
}

unsafe fn text<'a>(s: *const c_char) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(Failure(OlabStatus::OlabErrNull, "null string".into()));
    }
    CStr::from_ptr(s).to_str().map_err(|e| Failure(OlabStatus::OlabErrUtf8, e.to_string()))
}

unsafe fn circuit<'a>(c: *const OlabCircuit) -> Result<&'a Circuit, Failure> {
    c.as_ref().map(|c| &c.0).ok_or(Failure(OlabStatus::OlabErrNull, "null circuit".into()))
}

unsafe fn write<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure(OlabStatus::OlabErrNull, "null out pointer".into()));
    }
    out.write(value);
    Ok(())
}

/// Hand a circuit to the caller; the handle is only allocated once `out` is
/// known to be writable.
unsafe fn give(out: *mut *mut OlabCircuit, c: Circuit) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure(OlabStatus::OlabErrNull, "null out pointer".into()));
    }
    out.write(Box::into_raw(Box::new(OlabCircuit(c))));
    Ok(())
}

unsafe fn give_string(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure(OlabStatus::OlabErrNull, "null out pointer".into()));
    }
    out.write(CString::new(s.replace('\0', " ")).expect("NULs removed").into_raw());
    Ok(())
}

fn mode(code: i32) -> Result<LearnMode, Failure> {
    match code {
        OLAB_MODE_ADAPTIVE => Ok(LearnMode::Adaptive),
        OLAB_MODE_PARALLEL => Ok(LearnMode::Parallel),
        OLAB_MODE_NPLOG => Ok(LearnMode::Nplog),
        _ => Err(argument(format!("unknown learner mode {code}"))),
    }
}

fn table(n: usize, bits: u64) -> Result<TruthTable, Failure> {
    if !(1..=MAX_INPUTS).contains(&n) {
        return Err(argument(format!("input count {n} outside 1..={MAX_INPUTS}")));
    }
    if bits & !TruthTable::full_mask(n) != 0 {
        return Err(argument(format!("truth table {bits:#x} has bits beyond 2^{n} inputs")));
    }
    Ok(TruthTable::from_bits(n, bits))
}

/// Message of the last failed call on this thread; empty after a success.
/// Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn olab_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn olab_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parse the circuit text format (`inputs n`, gate lines, `output w`).
///
/// # Safety
/// `src` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn olab_circuit_parse(src: *const c_char, out: *mut *mut OlabCircuit) -> OlabStatus {
    guard(|| {
        let c: Circuit = text(src)?.parse()?;
        give(out, c)
    })
}

/// # Safety
/// `c` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn olab_circuit_free(c: *mut OlabCircuit) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// # Safety
/// `c` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn olab_circuit_inputs(c: *const OlabCircuit, out: *mut usize) -> OlabStatus {
    guard(|| write(out, circuit(c)?.n()))
}

/// Number of gates.
///
/// # Safety
/// `c` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn olab_circuit_size(c: *const OlabCircuit, out: *mut usize) -> OlabStatus {
    guard(|| write(out, circuit(c)?.size()))
}

/// Value on input `x`, where bit `i - 1` of `x` is input `x_i`.
///
/// # Safety
/// `c` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn olab_circuit_eval(c: *const OlabCircuit, x: u64, out: *mut bool) -> OlabStatus {
    guard(|| {
        let c = circuit(c)?;
        if x >> c.n() != 0 {
            return Err(argument(format!("input {x} outside 2^{} inputs", c.n())));
        }
        write(out, c.eval_index(x))
    })
}

/// Truth table with bit `x` holding the value on input `x`.
///
/// # Safety
/// `c` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn olab_circuit_truth_table(c: *const OlabCircuit, out: *mut u64) -> OlabStatus {
    guard(|| write(out, circuit(c)?.truth_table().bits()))
}

/// The circuit in text format; free with [`olab_string_free`].
///
/// # Safety
/// `c` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn olab_circuit_to_text(c: *const OlabCircuit, out: *mut *mut c_char) -> OlabStatus {
    guard(|| give_string(out, circuit(c)?.to_string()))
}

/// Whether no smaller circuit computes the same function.
///
/// # Safety
/// `c` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn olab_circuit_is_minimal(c: *const OlabCircuit, out: *mut bool) -> OlabStatus {
    guard(|| write(out, is_minimal(circuit(c)?)))
}

/// Learn a circuit of at most `s` gates for the `n`-input function `table_bits`
/// from membership probes. `samples` (odd) and `seed` drive the adaptive
/// learner and are ignored by the others. `stats` may be null.
///
/// # Safety
/// `out` must be writable; `stats` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn olab_learn(
    n: usize,
    s: usize,
    table_bits: u64,
    mode_code: i32,
    samples: usize,
    seed: u64,
    out: *mut *mut OlabCircuit,
    stats: *mut OlabLearnStats,
) -> OlabStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure(OlabStatus::OlabErrNull, "null out pointer".into()));
        }
        let inst = LearnInstance::new(s, table(n, table_bits)?);
        let result = learn(&inst, mode(mode_code)?, samples, seed)?;
        if !stats.is_null() {
            stats.write(OlabLearnStats {
                batches: result.ledger.batches,
                queries: result.ledger.queries,
                f_probes: result.ledger.f_probes,
                rounds: result.rounds,
                retries: result.retries,
            });
        }
        give(out, result.circuit)
    })
}

/// A smallest equivalent of `c`, found from evaluations of `c` alone.
///
/// # Safety
/// `c` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn olab_minimize(
    c: *const OlabCircuit,
    mode_code: i32,
    samples: usize,
    seed: u64,
    out: *mut *mut OlabCircuit,
) -> OlabStatus {
    guard(|| {
        let result = minimize_blackbox(circuit(c)?, mode(mode_code)?, samples, seed)?;
        give(out, result.circuit)
    })
}

/// Diagonalize against every circuit of at most `s` gates on `n` inputs.
/// On success bit `t` of `*bits` is membership of input `t`, and `*length`
/// is the number of inputs decided.
///
/// # Safety
/// `bits` and `length` must be writable.
#[no_mangle]
pub unsafe extern "C" fn olab_diagonalize(n: usize, s: usize, bits: *mut u64, length: *mut usize) -> OlabStatus {
    guard(|| {
        if !(1..=MAX_INPUTS).contains(&n) {
            return Err(argument(format!("input count {n} outside 1..={MAX_INPUTS}")));
        }
        if bits.is_null() || length.is_null() {
            return Err(Failure(OlabStatus::OlabErrNull, "null out pointer".into()));
        }
        let h = oracle_lab::diag::build_hard_language(n, s)?;
        let packed = h.bits.iter().enumerate().fold(0u64, |acc, (t, &b)| acc | (b as u64) << t);
        bits.write(packed);
        length.write(h.length);
        Ok(())
    })
}

/// Run an experiment file (`{"command": ..., "config": {...}}`). The JSONL
/// trace goes to `*trace` (free with [`olab_string_free`]) and whether every
/// certification passed to `*certified`. A run that stops early still returns
/// `OLAB_OK` with its partial trace and `*certified = false`.
///
/// # Safety
/// `json` must be a NUL-terminated string; `trace` and `certified` writable.
#[no_mangle]
pub unsafe extern "C" fn olab_run_experiment(
    json: *const c_char,
    trace: *mut *mut c_char,
    certified: *mut bool,
) -> OlabStatus {
    guard(|| {
        if trace.is_null() || certified.is_null() {
            return Err(Failure(OlabStatus::OlabErrNull, "null out pointer".into()));
        }
        let exp = Experiment::from_json(text(json)?).map_err(|e| Failure(OlabStatus::OlabErrParse, e.to_string()))?;
        let report = run(&exp)?;
        certified.write(report.certified());
        give_string(trace, report.trace)
    })
}

/// Re-check a JSONL trace; `*passed` is whether every claim holds.
///
/// # Safety
/// `trace` must be a NUL-terminated string; `passed` writable.
#[no_mangle]
pub unsafe extern "C" fn olab_verify_trace(trace: *const c_char, passed: *mut bool) -> OlabStatus {
    guard(|| {
        write(passed, verify_trace(text(trace)?).passed())
    })
}

#ifndef ORACLE_LAB_H
#define ORACLE_LAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

// Learner selection for [`olab_learn`] and [`olab_minimize`].
#define OLAB_MODE_ADAPTIVE 0

#define OLAB_MODE_PARALLEL 1

#define OLAB_MODE_NPLOG 2

// Result code of every call.
enum OlabStatus
#if defined(__cplusplus) || __STDC_VERSION__ >= 202311L
  : int32_t
#endif // defined(__cplusplus) || __STDC_VERSION__ >= 202311L
 {
  OLAB_OK = 0,
  // A required pointer was null.
  OLAB_ERR_NULL = 1,
  // A string argument was not UTF-8.
  OLAB_ERR_UTF8 = 2,
  // Malformed circuit text, encoding or JSON.
  OLAB_ERR_PARSE = 3,
  // An argument is outside its documented range.
  OLAB_ERR_ARGUMENT = 4,
  // No circuit of the given size computes the target.
  OLAB_ERR_INSTANCE = 5,
  // The requested geometry does not fit (for example too few inputs to
  // diagonalize against the class).
  OLAB_ERR_GEOMETRY = 6,
  // A bounded search exceeded its budget.
  OLAB_ERR_BUDGET = 7,
  // A runtime certification failed inside the library.
  OLAB_ERR_INTERNAL = 8,
  OLAB_ERR_PANIC = 9,
};
#ifndef __cplusplus
#if __STDC_VERSION__ >= 202311L
typedef enum OlabStatus OlabStatus;
#else
typedef int32_t OlabStatus;
#endif // __STDC_VERSION__ >= 202311L
#endif // __cplusplus

// Opaque circuit handle.
typedef struct OlabCircuit OlabCircuit;

// Oracle accounting of one learning run.
typedef struct OlabLearnStats {
  // NP oracle batches (1 for the one-round learners).
  uint64_t batches;
  uint64_t queries;
  // Evaluations of the target function.
  uint64_t f_probes;
  // Adaptive learner rounds, including the last one that finds no input.
  uint64_t rounds;
  // Adaptive majority candidates rejected by verification.
  uint64_t retries;
} OlabLearnStats;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread; empty after a success.
// Valid until the next call on the same thread.
const char *olab_last_error_message(void);

// # Safety
// `s` must be null or a string returned by this library, not yet freed.
void olab_string_free(char *s);

// Parse the circuit text format (`inputs n`, gate lines, `output w`).
//
// # Safety
// `src` must be a NUL-terminated string; `out` must be writable.
OlabStatus olab_circuit_parse(const char *src, struct OlabCircuit **out);

// # Safety
// `c` must be null or a handle from this library, not yet freed.
void olab_circuit_free(struct OlabCircuit *c);

// # Safety
// `c` must be a live handle; `out` must be writable.
OlabStatus olab_circuit_inputs(const struct OlabCircuit *c, size_t *out);

// Number of gates.
//
// # Safety
// `c` must be a live handle; `out` must be writable.
OlabStatus olab_circuit_size(const struct OlabCircuit *c, size_t *out);

// Value on input `x`, where bit `i - 1` of `x` is input `x_i`.
//
// # Safety
// `c` must be a live handle; `out` must be writable.
OlabStatus olab_circuit_eval(const struct OlabCircuit *c, uint64_t x, bool *out);

// Truth table with bit `x` holding the value on input `x`.
//
// # Safety
// `c` must be a live handle; `out` must be writable.
OlabStatus olab_circuit_truth_table(const struct OlabCircuit *c, uint64_t *out);

// The circuit in text format; free with [`olab_string_free`].
//
// # Safety
// `c` must be a live handle; `out` must be writable.
OlabStatus olab_circuit_to_text(const struct OlabCircuit *c, char **out);

// Whether no smaller circuit computes the same function.
//
// # Safety
// `c` must be a live handle; `out` must be writable.
OlabStatus olab_circuit_is_minimal(const struct OlabCircuit *c, bool *out);

// Learn a circuit of at most `s` gates for the `n`-input function `table_bits`
// from membership probes. `samples` (odd) and `seed` drive the adaptive
// learner and are ignored by the others. `stats` may be null.
//
// # Safety
// `out` must be writable; `stats` must be null or writable.
OlabStatus olab_learn(size_t n,
                      size_t s,
                      uint64_t table_bits,
                      int32_t mode_code,
                      size_t samples,
                      uint64_t seed,
                      struct OlabCircuit **out,
                      struct OlabLearnStats *stats);

// A smallest equivalent of `c`, found from evaluations of `c` alone.
//
// # Safety
// `c` must be a live handle; `out` must be writable.
OlabStatus olab_minimize(const struct OlabCircuit *c,
                         int32_t mode_code,
                         size_t samples,
                         uint64_t seed,
                         struct OlabCircuit **out);

// Diagonalize against every circuit of at most `s` gates on `n` inputs.
// On success bit `t` of `*bits` is membership of input `t`, and `*length`
// is the number of inputs decided.
//
// # Safety
// `bits` and `length` must be writable.
OlabStatus olab_diagonalize(size_t n, size_t s, uint64_t *bits, size_t *length);

// Run an experiment file (`{"command": ..., "config": {...}}`). The JSONL
// trace goes to `*trace` (free with [`olab_string_free`]) and whether every
// certification passed to `*certified`. A run that stops early still returns
// `OLAB_OK` with its partial trace and `*certified = false`.
//
// # Safety
// `json` must be a NUL-terminated string; `trace` and `certified` writable.
OlabStatus olab_run_experiment(const char *json, char **trace, bool *certified);

// Re-check a JSONL trace; `*passed` is whether every claim holds.
//
// # Safety
// `trace` must be a NUL-terminated string; `passed` writable.
OlabStatus olab_verify_trace(const char *trace, bool *passed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ORACLE_LAB_H */

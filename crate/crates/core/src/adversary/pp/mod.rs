//! The row-encoding adversary against threshold-polynomial machines.

pub mod config;
pub mod construction;
pub mod machine;
pub mod poly_search;
pub mod progress;

pub use config::{EncodeMode, MachineFamily, MachineSpec, PpBudgets, PpConfig};
pub use construction::{
    condition_c, encode_row, encode_row_with_time, encode_row_xor, encode_set, find_insensitive_row, find_latest_row,
    machine_output, outputs, run_construction, sensitive_pairs, verify_parity, Adversary, DoublingCase, LatestRow,
    PpRecord, PpRun,
};
pub use machine::{Term, ThresholdMachine};
pub use poly_search::{ns_search, AmplifyResult, MultilinearPoly};
pub use progress::{progress_q, q_bounds, q_term, ProgressQ};

//! The row-encoding adversary against bounded-error machines that make one
//! round of existential queries.

pub mod config;
pub mod construction;
pub mod machine;

pub use config::{ParBudgets, ParConfig, ParFamily};
pub use construction::{
    accept_probs, check_kill_counts, encode_row_round, kill_count, progress_w, round, run_construction, sensitive,
    ParRecord, ParRun,
};
pub use machine::{AdaptiveMachine, Branch, DecisionTree, NpQuery, ParallelMachine, Path, Read};

//! Simulators of two oracle constructions that defeat every machine of a
//! finite family by encoding machine answers into rows of a table.

pub mod parallel;
pub mod pp;
pub mod subset;
pub mod table;

pub use table::{Cell, OracleTable};

/// A construction that stopped early, with the trace written so far.
#[derive(Debug)]
pub struct RunFailure<R> {
    pub error: crate::LabError,
    pub trace: Vec<R>,
}

impl<R> RunFailure<R> {
    pub fn bare(error: crate::LabError) -> Self {
        RunFailure { error, trace: Vec::new() }
    }
}

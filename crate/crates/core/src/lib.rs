//! Exact black-box learning and minimization of small Boolean circuits under a
//! simulated NP oracle, with executable simulators of two adversarial oracle
//! constructions and a diagonalization procedure.

pub mod adversary;
pub mod bits;
pub mod circuit;
pub mod count;
pub mod diag;
pub mod error;
pub mod harness;
pub mod learner;
pub mod np;
pub mod ratio;

pub use error::{LabError, Result};

use thiserror::Error;

/// Structural problems with a circuit or its encoding.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WellFormednessError {
    #[error("input count {0} outside supported range 1..=6")]
    InputCount(usize),
    #[error("gate g{gate} references wire {wire}, which is not an earlier wire")]
    ForwardReference { gate: usize, wire: u32 },
    #[error("NOT gate g{0} must carry second input 0")]
    NotArity(usize),
    #[error("output wire {0} out of range")]
    Output(u32),
    #[error("input vector has {got} bits, circuit expects {want}")]
    InputLength { got: usize, want: usize },
    #[error("encoding length {got}, layout expects {want}")]
    EncodingLength { got: usize, want: usize },
    #[error("size field {size} exceeds bound {max}")]
    SizeField { size: usize, max: usize },
    #[error("gate record {0} has invalid opcode")]
    Opcode(usize),
    #[error("padding gate record {0} is not all-zero")]
    Padding(usize),
    #[error("circuit of size {size} does not fit layout bound {max}")]
    TooLarge { size: usize, max: usize },
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Errors raised by the bounded-search NP engine and everything built on it.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SearchBudgetError {
    #[error("witness length {len} exceeds exhaustive cap {cap}")]
    WitnessLength { len: usize, cap: usize },
    #[error("search visited more than {0} nodes")]
    Nodes(u64),
}

#[derive(Debug, Error)]
pub enum LabError {
    #[error(transparent)]
    WellFormedness(#[from] WellFormednessError),
    #[error(transparent)]
    SearchBudget(#[from] SearchBudgetError),
    #[error("majority needs an odd, nonzero number of circuits over one input count (got {0})")]
    Arity(usize),
    #[error("instance error: {0}")]
    Instance(String),
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("construction stalled at iteration {iteration}: {reason}")]
    Stalled { iteration: usize, reason: String },
    #[error("internal invariant violated: {0}")]
    InternalInvariant(String),
    #[error("not found")]
    NotFound,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = LabError> = std::result::Result<T, E>;

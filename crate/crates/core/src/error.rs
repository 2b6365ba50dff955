use thiserror::Error;

use crate::network::Diagnostic;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("party `{0}` has an empty input alphabet")]
    EmptyAlphabet(String),

    #[error("party `{0}` lists input symbol {1} more than once")]
    DuplicateInput(String, u32),

    #[error("a network needs at least one party")]
    NoParties,

    #[error("expected {expected} input alphabets, got {got}")]
    AlphabetCount { expected: usize, got: usize },

    #[error("party `{0}` not found")]
    PartyNotFound(String),

    #[error("duplicate identifier `{0}`")]
    DuplicateId(String),

    #[error("party `{0}` must have exactly two nontrivial inputs {{0, 1}}")]
    NotBinary(String),

    #[error("invalid network: {}", format_diagnostics(.0))]
    InvalidNetwork(Vec<Diagnostic>),

    #[error("invalid input tuple: {0}")]
    InvalidTuple(String),

    #[error("correlator value {value} at {tuple} is outside [-1, 1]")]
    ValueOutOfRange { tuple: String, value: f64 },

    #[error("the all-trivial correlator must be 1, found {0}")]
    TrivialCorrelator(f64),

    #[error("behavior is not normalized for input tuple {tuple}: sum = {sum}")]
    NotNormalized { tuple: String, sum: f64 },

    #[error("negative probability {0}")]
    NegativeProbability(f64),

    #[error("operands live on different networks")]
    NetworkMismatch,

    #[error("network is not a leaf extension: {0}")]
    NotALeafExtension(String),

    #[error("partition does not split the anchor's inputs: {0}")]
    PartitionMismatch(String),

    #[error("incompatible expression family: {0}")]
    IncompatibleFamily(String),

    #[error("invalid expression: {0}")]
    InvalidExpression(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid density operator for source `{source_id}`: {reason}")]
    InvalidState { source_id: String, reason: String },

    #[error("invalid observable for party `{party}` input {input}: {reason}")]
    InvalidObservable { party: String, input: u32, reason: String },

    #[error("correlator has non-negligible imaginary part {0:e}")]
    ImaginaryResidue(f64),

    #[error("violation predicate has no sign change on [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },

    #[error("violation predicate is not monotone on the scanned range (flips back at V = {0})")]
    NonMonotone(f64),

    #[error("enumeration needs {required} strategies, budget is {budget}")]
    BudgetExceeded { required: u128, budget: u128 },

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn format_diagnostics(diags: &[Diagnostic]) -> String {
    diags
        .iter()
        .map(|d| d.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

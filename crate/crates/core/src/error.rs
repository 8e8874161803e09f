use thiserror::Error;

/// Errors raised across the crate. Variants are named after the contract
/// they enforce rather than the module that raises them.
#[derive(Debug, Error)]
pub enum Error {
    #[error("tied values in {variable}: observations {first} and {second} are equal")]
    TiesPresent {
        variable: String,
        first: usize,
        second: usize,
    },
    #[error("sample value at observation {index} is not finite")]
    NonFiniteSample { index: usize },
    #[error("lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("transformed value {value} at observation {index} is outside (0, 1]")]
    RangeError { index: usize, value: f64 },
    #[error("depth {requested} exceeds the {available} bits stored for {variable}")]
    DepthMismatch {
        variable: String,
        requested: u32,
        available: u32,
    },
    #[error("vector length {0} is not a power of two")]
    LengthNotPowerOfTwo(usize),
    #[error("cell probability at index {index} is not strictly positive ({value})")]
    NonPositiveProbability { index: usize, value: f64 },
    #[error("cell probabilities sum to {sum}, expected 1 within 1e-12")]
    ProbabilityMass { sum: f64 },
    #[error("statistic {s} has the wrong parity for n = {n}")]
    ParityViolation { s: i64, n: u64 },
    #[error("statistic {s} is outside [-{n}, {n}]")]
    OutOfRange { s: i64, n: u64 },
    #[error("margins are unequal (n = {n} is odd); use the Fisher 2x2 path")]
    MarginMismatch { n: u64 },
    #[error("statistic {s} does not map to a feasible 2x2 cell for n = {n}, r = {r}, c = {c}")]
    InfeasibleCell { s: i64, n: u64, r: u64, c: u64 },
    #[error("degenerate variance for n = {n}, r = {r}, c = {c}")]
    DegenerateVariance { n: u64, r: u64, c: u64 },
    #[error("sample size {n} is below 2^{depth} = {required}")]
    SampleTooSmall { n: usize, depth: u32, required: u64 },
    #[error("{axis} margin {index} of the contingency table is empty")]
    EmptyMargin { axis: &'static str, index: usize },
    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),
    #[error("unknown interaction label `{label}` at depths ({d1}, {d2})")]
    BadInteractionLabel { label: String, d1: u32, d2: u32 },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

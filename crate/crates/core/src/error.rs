use thiserror::Error;

use crate::instance::SupportViolation;

/// Problems reading the JSON wire formats.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("rationals only: `{0}` looks like a floating-point number")]
    FloatRejected(String),
    #[error("malformed rational `{0}`")]
    BadRational(String),
    #[error("zero denominator in `{0}`")]
    ZeroDenominator(String),
    #[error("invalid JSON: {0}")]
    Json(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("dimension mismatch: instance has n = {file}, flag says n = {flag}")]
    DimensionMismatch { file: usize, flag: usize },
    #[error("dimension n missing: supply it in the instance or with --n")]
    MissingDimension,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("support condition fails: {0}")]
    SupportCondition(SupportViolation),
    #[error("support check limited to r <= {max}, got r = {r}")]
    TooManyGenerators { r: usize, max: usize },
    #[error("instance violates the genericity condition at rows ({0}, {1}), columns ({2}, {3})")]
    NotGeneric(usize, usize, usize, usize),
    #[error("{what}: retry budget of {budget} exhausted")]
    RetryExhausted { what: &'static str, budget: usize },
    #[error("weights are not admissible: {0}")]
    NotAdmissible(String),
    #[error("balancing stuck: no row can transfer across the gap after coordinate position {gap}")]
    Stuck { gap: usize },
    #[error("balancing exceeded {cap} moves (sorted counts {counts:?})")]
    IterationCap { cap: usize, counts: Vec<usize> },
    #[error("certificate margin nonpositive (delta* = {0})")]
    MarginNonpositive(String),
    #[error("threshold not met: q = {q} < {required} for r = {r}, n = {n}")]
    Threshold { n: usize, r: usize, q: usize, required: usize },
    #[error("no partition found: {0}")]
    NoPartition(String),
    #[error("oracle guard violated: {0}")]
    Guard(String),
    #[error("generator precondition: {0}")]
    Generator(String),
    #[error("rejection sampling exhausted after {budget} draws (last failure: {last})")]
    RejectionExhausted { budget: usize, last: SupportViolation },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

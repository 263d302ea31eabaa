use thiserror::Error;

/// Errors raised across the toolkit.
///
/// Usage errors (`UnknownVar`, `CoordMismatch`, ...) indicate a caller bug;
/// validation errors (`NotNormalized`, `Factorization`, ...) indicate bad input data.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown variable `{0}`")]
    UnknownVar(String),

    #[error("duplicate variable `{0}`")]
    DuplicateVar(String),

    #[error("variable `{name}` has invalid cardinality {card}")]
    BadCardinality { name: String, card: usize },

    #[error("variable groups overlap on `{0}`")]
    OverlappingGroups(String),

    #[error("{what}: expected {expected} entries, found {found}")]
    Shape {
        what: String,
        expected: usize,
        found: usize,
    },

    #[error("{what}: entry {index} is negative or not finite ({value})")]
    BadEntry {
        what: String,
        index: usize,
        value: f64,
    },

    #[error("{what}: row {row} sums to {sum}, expected 1")]
    NotNormalized { what: String, row: usize, sum: f64 },

    #[error("factor for `{target}` conditions on `{given}` which is not yet defined")]
    CyclicFactor { target: String, given: String },

    #[error("alphabet mismatch for {what}: expected {expected}, found {found}")]
    AlphabetMismatch {
        what: String,
        expected: usize,
        found: usize,
    },

    #[error("{map}: entry {index} maps to {value}, outside alphabet of size {card}")]
    OutOfAlphabet {
        map: String,
        index: usize,
        value: usize,
        card: usize,
    },

    #[error(
        "interference not recoverable at receiver {receiver}: own input {input} maps interference values {first} and {second} to the same output"
    )]
    NotRecoverable {
        receiver: u8,
        input: usize,
        first: usize,
        second: usize,
    },

    #[error("distribution violates the required factorization: {constraint} = {residual:e} bits")]
    Factorization { constraint: String, residual: f64 },

    #[error("coordinate mismatch: {0}")]
    CoordMismatch(String),

    #[error("invalid inequality system: {0}")]
    InvalidSystem(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("resource cap exceeded: {0}")]
    ResourceCap(String),

    #[error("index {index} out of range for {what} (size {size})")]
    IndexOutOfRange {
        what: String,
        index: usize,
        size: usize,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

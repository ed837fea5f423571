use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid degree {d} for {n} qubits (need d <= n)")]
    InvalidDegree { n: usize, d: usize },

    #[error("cannot parse {what}: {input:?}")]
    Parse { what: &'static str, input: String },

    #[error("numerical degeneracy: {0}")]
    NumericalDegeneracy(String),

    #[error("weight entry {row} is negative ({value:e})")]
    InvalidWeight { row: usize, value: f64 },

    #[error("matrix is not unitary (max deviation of U^dag U from identity: {0:e})")]
    InvalidUnitary(f64),

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("bound not applicable: {0}")]
    BoundInapplicable(String),

    #[error("dense simulation supports at most {max} qubits, got {n}; use the factorized sampler")]
    UseFactorizedPath { n: usize, max: usize },

    #[error("unsupported topology: {0}")]
    UnsupportedTopology(String),

    #[error("invalid frame assignment: {0}")]
    InvalidFrameAssignment(String),

    #[error("arity mismatch: expected {expected}, found {found}")]
    ArityMismatch { expected: usize, found: usize },

    #[error("accumulators cannot be merged: {0}")]
    IncompatibleAccumulators(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no snapshots to estimate from")]
    NoData,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("step function needs at least one atom")]
    EmptyStepFunction,

    #[error("atom {index}: measure {measure} must be finite and > 0")]
    NonPositiveMeasure { index: usize, measure: f64 },

    #[error("atom {index}: value {value} is not finite")]
    NonFiniteValue { index: usize, value: f64 },

    #[error("line {line}: {msg}")]
    Csv { line: usize, msg: String },

    #[error("invalid exponent grid: {0}")]
    InvalidGrid(String),

    #[error("theta must be >= 0, got {0}")]
    NegativeTheta(f64),

    #[error("exponent p must be > 1, got {0}")]
    ExponentNotAboveOne(f64),

    #[error("operation requires total measure 1, got {0}")]
    MeasureNotUnit(f64),

    #[error("step functions are not on a shared partition: {0}")]
    PartitionMismatch(String),

    #[error("invalid analytic function spec: {0}")]
    InvalidSpec(String),

    #[error("operation `{op}` does not support kind `{kind}`")]
    UnsupportedKind { op: &'static str, kind: String },

    #[error("invalid grid function: {0}")]
    InvalidGridFunction(String),

    #[error("grids do not match: {0}")]
    GridMismatch(String),

    #[error("weight must be strictly positive and finite (sample {index} = {value})")]
    NonPositiveWeight { index: usize, value: f64 },

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("empty region")]
    EmptyRegion,

    #[error("no admissible dyadic cubes at the requested levels")]
    NoAdmissibleCubes,

    #[error("corpus is empty (or all entries have zero norm)")]
    EmptyCorpus,

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

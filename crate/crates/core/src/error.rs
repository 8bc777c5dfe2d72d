use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("wells overlap: radius {r0} nm must be below a quarter of the period {period} nm")]
    OverlappingWells { r0: f64, period: f64 },

    #[error("eigensolver did not converge after {iterations} restarts (max residual {residual:.3e} meV)")]
    Solver { iterations: usize, residual: f64 },

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("unknown irrep '{0}'")]
    UnknownIrrep(String),

    #[error("self-consistency did not converge in {iterations} iterations (last change {last:.3e} meV)")]
    Convergence { iterations: usize, last: f64, history: Vec<f64> },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not unitary (deviation {0:.3e})")]
    NonUnitary(f64),

    #[error("trace drifted by {drift:.3e} at t = {time} ps; reduce the step size")]
    TraceDrift { drift: f64, time: f64 },

    #[error("schema error: missing column '{0}'")]
    Schema(String),

    #[error("parse error at row {row}: field '{field}': {message}")]
    Parse { row: u64, field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("negative time {0}")]
    NegativeTime(f64),

    #[error("probability {0} outside (0, 1]")]
    OutOfRange(f64),

    #[error("law has no survivors at age {0}")]
    DeadAtAge(f64),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("degenerate grid: {0}")]
    DegenerateGrid(String),

    #[error("invalid model function: {which}({t}) = {value} is outside [0, t]")]
    InvalidModelFunction { which: &'static str, t: f64, value: f64 },

    #[error("invalid model function parameters: {0}")]
    InvalidModelParameters(String),

    #[error("quadrature did not reach tolerance {tol:e} on [{a}, {b}] within depth {depth}")]
    QuadratureFailure { a: f64, b: f64, tol: f64, depth: u32 },

    #[error("numerical underflow: {0}")]
    NumericalUnderflow(String),

    #[error("unknown component id `{0}`")]
    UnknownComponent(String),

    #[error("component id `{0}` is used more than once in one system")]
    DuplicateComponent(String),

    #[error("systems do not share a registry: {0}")]
    RegistryMismatch(String),

    #[error("arity mismatch: {0}")]
    ArityMismatch(String),

    #[error("model function mismatch: {0}")]
    ModelFunctionMismatch(String),

    #[error("truncation remainder {remainder:e} exceeds tolerance {tol:e}")]
    TruncationWarning { remainder: f64, tol: f64 },

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("failed to read survival table: {0}")]
    Table(String),
}

pub(crate) fn check_time(t: f64) -> Result<()> {
    if t.is_nan() || t < 0.0 {
        Err(Error::NegativeTime(t))
    } else {
        Ok(())
    }
}

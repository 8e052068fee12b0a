use thiserror::Error;

/// Errors raised by the simulation, sensitivity and fitting routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("site {site} out of range for {n_qubits} qubits")]
    SiteOutOfRange { site: usize, n_qubits: usize },
    #[error("site {0} appears more than once in a Pauli string")]
    DuplicateSite(usize),
    #[error("{sites} sites but {axes} axes")]
    LengthMismatch { sites: usize, axes: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("singular matrix: pivot {pivot} has magnitude {magnitude:e}")]
    Singular { pivot: usize, magnitude: f64 },
    #[error("matrix is not Hermitian (defect {0:e})")]
    NotHermitian(f64),
    #[error("expectation has imaginary part {0:e}")]
    ComplexExpectation(f64),
    #[error("wrong parameter count: expected {expected}, found {found}")]
    ParameterCount { expected: usize, found: usize },
    #[error("parameter index {index} out of range for {len} parameters")]
    ParameterIndex { index: usize, len: usize },
    #[error("negative dissipation strength {value} for {name}")]
    NegativeStrength { name: String, value: f64 },
    #[error("derivative of sqrt(lambda) is singular at {name} = 0; use amplitude mode")]
    SingularStrengthDerivative { name: String },
    #[error("invalid step size {0}")]
    InvalidStep(f64),
    #[error("interval {interval} is not an integer multiple of the step {dt}")]
    NonIntegerRatio { interval: f64, dt: f64 },
    #[error("noise support too large: {0} jump operators (at most 3 can be enumerated)")]
    SupportTooLarge(usize),
    #[error("need at least {needed} recorded states, found {found}")]
    TooFewStates { needed: usize, found: usize },
    #[error("system is not positive definite (pivot {0})")]
    Indefinite(usize),
    #[error("mismatched construction: {0}")]
    Mismatch(String),
    #[error("Jacobian disagrees with finite differences of the residuals (column {column}, relative error {error:e})")]
    InconsistentJacobian { column: usize, error: f64 },
    #[error("too few converging iterations ({0}) for a rate fit")]
    TooFewIterations(usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

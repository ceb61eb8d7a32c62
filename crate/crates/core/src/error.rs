use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite entry in {0}")]
    NonFinite(String),

    #[error("QR iteration did not converge after {iterations} iterations (dim {dim})")]
    NonConvergence { dim: usize, iterations: usize },

    #[error("degenerate spectrum: eigenvalues {i} and {j} coincide within tolerance {tol:e}")]
    DegenerateSpectrum { i: usize, j: usize, tol: f64 },

    #[error("eigenvector basis is numerically singular (condition estimate {condition:e})")]
    SingularBasis { condition: f64 },

    #[error("eigenvalue {value} has non-positive real part; logarithm undefined")]
    NonPositiveEigenvalue { value: f64 },

    #[error("spectrum is not numerically real (max |Im| = {max_imag:e})")]
    ComplexSpectrum { max_imag: f64 },

    #[error("invalid model: {0}")]
    InvalidSpec(String),

    #[error("invalid bath: {0}")]
    InvalidBath(String),

    #[error("rate requested at zero frequency")]
    ZeroFrequency,

    #[error("PT symmetry is broken (max |Im e| = {max_imag:e})")]
    PtBroken { max_imag: f64 },

    #[error("decomposition basis does not match the Hamiltonian: {0}")]
    MismatchedBasis(String),

    #[error("superoperator of dimension {dim} exceeds the dense limit {limit}")]
    TooLarge { dim: usize, limit: usize },

    #[error("step size underflow at t = {time}")]
    StepSizeUnderflow { time: f64 },

    #[error("state became non-finite at t = {time}")]
    NonFiniteState { time: f64 },

    #[error("trace of the density matrix vanishes")]
    ZeroTrace,

    #[error("Pauli matrix has no null vector (smallest |lambda| = {smallest:e})")]
    NoNullVector { smallest: f64 },

    #[error("thermalization condition violated for pair ({m}, {n}): residual {residual:e}")]
    ConditionViolated { m: usize, n: usize, residual: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid basis request: {0}")]
    InvalidBasis(String),

    #[error("state not in basis: {0}")]
    StateNotInBasis(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("model/basis mismatch: {0}")]
    ModelMismatch(String),

    #[error("operator is not Hermitian (max |A - A^dagger| = {deviation:e})")]
    NonHermitian { deviation: f64 },

    #[error("expectation value has imaginary part {imag:e}")]
    ComplexExpectation { imag: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("step size underflow at t = {t} fs (h = {h:e} fs)")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("too many integration steps ({steps}) before t = {t} fs")]
    TooManySteps { steps: usize, t: f64 },

    #[error("trace drift {drift:e} at t = {t} fs exceeds the abort threshold")]
    TraceDrift { t: f64, drift: f64 },

    #[error("group projectors do not resolve the identity (deviation {deviation:e})")]
    IncompleteProjectors { deviation: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of the numerical pipeline (integrator, projectors)
    /// as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::StepSizeUnderflow { .. }
                | Error::TooManySteps { .. }
                | Error::TraceDrift { .. }
                | Error::IncompleteProjectors { .. }
                | Error::NonHermitian { .. }
                | Error::ComplexExpectation { .. }
        )
    }
}

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("unknown model `{0}`")]
    UnknownModel(String),
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("dilation factor must be nonzero")]
    ZeroDilation,
    #[error("matrix is not a rotation (deviation {0:.3e})")]
    NotRotation(f64),
    #[error("small-oscillation regime, no normal form")]
    NoNormalForm,
    #[error("empty Hill region: the potential exceeds the energy level everywhere")]
    EmptyHill,
    #[error("energy off shell by {0:.3e}")]
    OffShell(f64),
    #[error("time {t} outside sampled span [{lo}, {hi}]")]
    OutOfSpan { t: f64, lo: f64, hi: f64 },
    #[error("non-integrable singularity near r = {0}")]
    SingularOrbit(f64),
    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64, state: Vec<f64> },
    #[error("non-finite derivative at t = {t}")]
    NonFinite { t: f64 },
    #[error("step budget exhausted at t = {t}")]
    MaxSteps { t: f64 },
    #[error("solver failed: {0}")]
    Solver(String),
}

impl Error {
    /// True for errors caused by bad input rather than numerical failure.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::UnknownModel(_)
                | Error::InvalidParam(_)
                | Error::Dimension { .. }
                | Error::ZeroDilation
                | Error::NotRotation(_)
                | Error::OutOfSpan { .. }
                | Error::OffShell(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

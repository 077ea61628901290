use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("conjugate is singular at lambda = {0}")]
    SingularConjugate(f64),
    #[error("degenerate Levy measure: a = b = 0 and m0 = 0")]
    DegenerateMeasure,
    #[error("spec is not admissible: {0}")]
    NotAdmissible(String),
    #[error("Laplace inversion unstable at x = {x}: {reason}")]
    InversionUnstable { x: f64, reason: String },
    #[error("censoring condition violated: q = {0} >= 1")]
    CensoringConditionViolated(f64),
    #[error("sticky extension needs a grid node at x = 0")]
    MissingBoundary,
    #[error("series did not certify decay within {0} terms")]
    SeriesDivergence(usize),
    #[error("numerics error: {0}")]
    Numerics(String),
    #[error("insufficient data: {have} samples at step {step}, need {need}")]
    InsufficientData { step: usize, have: usize, need: usize },
    #[error("config error at line {line}: {msg}")]
    Config { line: usize, msg: String },
    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// True for failures of a numerical certificate (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::InversionUnstable { .. }
                | Error::SeriesDivergence(_)
                | Error::Numerics(_)
                | Error::CensoringConditionViolated(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Failures raised by the calculus kernel, the model and the integrator.
///
/// Every variant maps to a stable upper-case code through [`Error::code`]; the CLI and
/// the report files use those codes verbatim.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("TIME_NOT_IN_SCALE: t = {t} is not a point of the time scale")]
    TimeNotInScale { t: f64 },

    #[error("NOT_REGRESSIVE: 1 + mu*p = {value} at t = {t} (mu = {mu})")]
    NotRegressive { t: f64, mu: f64, value: f64 },

    #[error("AT_MAXIMUM: t = {t} is the left-scattered maximum, no delta derivative exists")]
    AtMaximum { t: f64 },

    #[error("EMPTY_POPULATION: total population N = {n} must be positive")]
    EmptyPopulation { n: f64 },

    #[error("DEGENERATE_BOUNDS: lower permanence bound m = {m} must be positive")]
    DegenerateBounds { m: f64 },

    #[error("H1_VIOLATION: lambda({t}) = {lambda} outside [{lo}, {hi}]")]
    H1Violation { t: f64, lambda: f64, lo: f64, hi: f64 },

    #[error("NONFINITE_STATE: {detail} at t = {t}")]
    NonfiniteState { t: f64, detail: String },

    #[error("MISMATCHED_TRAJECTORIES: {0}")]
    MismatchedTrajectories(String),

    #[error("CERTIFICATE_NOT_HELD: hypothesis Gamma2 < Gamma1 fails ({0})")]
    CertificateNotHeld(String),

    #[error("INVALID_TIMESCALE: {0}")]
    InvalidTimeScale(String),

    #[error("TIMESCALE_SYNTAX: {message} at column {column}")]
    TimeScaleSyntax { column: usize, message: String },

    #[error("INVALID_PARAMS: {0}")]
    InvalidParams(String),

    #[error("INVALID_ARGUMENT: {0}")]
    InvalidArgument(String),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::TimeNotInScale { .. } => "TIME_NOT_IN_SCALE",
            Error::NotRegressive { .. } => "NOT_REGRESSIVE",
            Error::AtMaximum { .. } => "AT_MAXIMUM",
            Error::EmptyPopulation { .. } => "EMPTY_POPULATION",
            Error::DegenerateBounds { .. } => "DEGENERATE_BOUNDS",
            Error::H1Violation { .. } => "H1_VIOLATION",
            Error::NonfiniteState { .. } => "NONFINITE_STATE",
            Error::MismatchedTrajectories(_) => "MISMATCHED_TRAJECTORIES",
            Error::CertificateNotHeld(_) => "CERTIFICATE_NOT_HELD",
            Error::InvalidTimeScale(_) => "INVALID_TIMESCALE",
            Error::TimeScaleSyntax { .. } => "TIMESCALE_SYNTAX",
            Error::InvalidParams(_) => "INVALID_PARAMS",
            Error::InvalidArgument(_) => "INVALID_ARGUMENT",
        }
    }
}

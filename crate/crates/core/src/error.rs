use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("series did not reach the requested tolerance within {limit} terms")]
    IterationLimitExceeded { limit: u64 },

    #[error("value overflows f64 (log value {log_value})")]
    Overflow { log_value: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate distribution: {0}")]
    DegenerateDistribution(String),

    #[error("survival probability underflows at y = {y}")]
    NumericalUnderflow { y: u64 },

    #[error("fit failed: {0}")]
    FitFailed(String),

    #[error("divergent series: {0}")]
    DivergentSeries(String),

    #[error("undefined: {0}")]
    Undefined(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Short stable name of the variant, used on diagnostic output.
    pub fn name(&self) -> &'static str {
        match self {
            Error::InvalidParams(_) => "InvalidParams",
            Error::IterationLimitExceeded { .. } => "IterationLimitExceeded",
            Error::Overflow { .. } => "Overflow",
            Error::Domain(_) => "DomainError",
            Error::DegenerateDistribution(_) => "DegenerateDistribution",
            Error::NumericalUnderflow { .. } => "NumericalUnderflow",
            Error::FitFailed(_) => "FitFailed",
            Error::DivergentSeries(_) => "DivergentSeries",
            Error::Undefined(_) => "Undefined",
            Error::Parse(_) => "ParseError",
        }
    }

    /// True for errors caused by bad user input rather than numerical trouble.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::InvalidParams(_) | Error::Domain(_) | Error::DivergentSeries(_) | Error::Parse(_)
        )
    }
}

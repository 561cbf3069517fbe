use thiserror::Error;

/// Errors produced by pmf construction, transforms and the checkers.
#[derive(Debug, Clone, PartialEq, Error)]
#[non_exhaustive]
pub enum Error {
    /// A scalar parameter is outside its admissible range.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// A probability vector fails the pmf invariants.
    #[error("invalid pmf: {0}")]
    InvalidPmf(String),

    /// Inverse thinning produced a negative (or non-finite) mass.
    #[error("not {alpha}-thinnable: solved entry {index} = {value:e}")]
    NotThinnable { alpha: f64, index: usize, value: f64 },

    /// A functional is undefined for the given pmf.
    #[error("domain error: {0}")]
    Domain(String),

    /// An input violates the hypotheses of a theorem checker.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// No pair (X*, Y*) with equal entropies exists on the feasible alpha set.
    #[error("no admissible (X*,Y*) decomposition: {0}")]
    NoDecomposition(String),

    /// A root finder or bracket search failed.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// A dense joint table would exceed the configured cell budget.
    #[error("joint table needs {cells} cells, budget is {budget}")]
    Capacity { cells: usize, budget: usize },

    /// An algebraic identity that must hold exactly was violated.
    #[error("internal consistency error: {0}")]
    Consistency(String),

    #[error("unknown conjecture id `{0}`")]
    UnknownConjecture(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Stable snake_case identifier for machine-readable error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parameter(_) => "parameter",
            Error::InvalidPmf(_) => "invalid_pmf",
            Error::NotThinnable { .. } => "not_thinnable",
            Error::Domain(_) => "domain",
            Error::Precondition(_) => "precondition",
            Error::NoDecomposition(_) => "no_decomposition",
            Error::Numeric(_) => "numeric",
            Error::Capacity { .. } => "capacity",
            Error::Consistency(_) => "consistency",
            Error::UnknownConjecture(_) => "unknown_conjecture",
        }
    }

    /// True for errors caused by the caller's input rather than by a
    /// numerical or internal failure.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::Numeric(_) | Error::Consistency(_))
    }
}

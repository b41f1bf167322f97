use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("non-finite input: {0}")]
    NonFinite(String),

    #[error("infeasible budget: prior tail mass {tail} is not below the EABF threshold {b}")]
    InfeasibleBudget { tail: f64, b: f64 },

    #[error(
        "refinement exhausted after {refinements} refinements: best estimate {best_estimate:e} exceeds tolerance {tolerance:e}"
    )]
    RefinementExhausted {
        refinements: usize,
        best_estimate: f64,
        tolerance: f64,
    },

    #[error(
        "error estimate increased under refinement (level {level}: {previous:e} -> {current:e}) while above tolerance"
    )]
    NonMonotoneRefinement {
        level: usize,
        previous: f64,
        current: f64,
    },

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("singular system (condition estimate {condition:e})")]
    Singular { condition: f64 },

    #[error("log target is NaN at state {state:?}")]
    NanTarget { state: Vec<f64> },

    #[error("degenerate: {0}")]
    Degenerate(String),

    #[error("grid too small: boundary density ratio {ratio:e} exceeds 1e-12")]
    GridTooSmall { ratio: f64 },

    #[error("configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("serialization: {0}")]
    Serialization(String),
}

impl Error {
    /// Stable identifier used in machine-readable error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Contract(_) => "contract_violation",
            Error::NonFinite(_) => "non_finite_input",
            Error::InfeasibleBudget { .. } => "infeasible_budget",
            Error::RefinementExhausted { .. } => "refinement_exhausted",
            Error::NonMonotoneRefinement { .. } => "non_monotone_refinement",
            Error::Solver(_) => "solver",
            Error::Singular { .. } => "singular",
            Error::NanTarget { .. } => "nan_target",
            Error::Degenerate(_) => "degenerate",
            Error::GridTooSmall { .. } => "grid_too_small",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
            Error::Serialization(_) => "serialization",
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}

impl From<toml::de::Error> for Error {
    fn from(e: toml::de::Error) -> Self {
        Error::Config(e.to_string())
    }
}

impl From<toml::ser::Error> for Error {
    fn from(e: toml::ser::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}

pub(crate) fn contract(msg: impl Into<String>) -> Error {
    Error::Contract(msg.into())
}

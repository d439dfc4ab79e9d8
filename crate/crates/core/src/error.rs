use thiserror::Error;

/// Diagnostics carried by a budget error raised part-way through a trace.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialTrace {
    pub paths_evaluated: usize,
    /// Primal of the weighted sum accumulated so far.
    pub partial_value: Vec<f64>,
    pub partial_kappa: f64,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("comparison with a NaN operand")]
    NanOperand,

    #[error("sharpness must be positive, got {0}")]
    InvalidSharpness(f64),

    #[error("density is undefined for infinite sharpness")]
    InfiniteDensity,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("path budget of {limit} exhausted after {} paths", .partial.paths_evaluated)]
    PathBudget { limit: usize, partial: PartialTrace },

    #[error("condition budget of {limit} exceeded on a single path")]
    ConditionBudget { limit: usize },

    #[error("tape budget of {limit} entries exceeded")]
    TapeBudget { limit: usize },

    #[error("{0}")]
    Domain(#[from] DomainError),

    #[error("non-finite {what}")]
    NonFinite { what: &'static str },

    #[error("program returned {got} outputs, expected {expected}")]
    OutputArity { expected: usize, got: usize },

    #[error("program takes {expected} inputs, got {got}")]
    InputArity { expected: usize, got: usize },

    #[error("replay diverged at condition {index}: {detail}")]
    ReplayMismatch { index: usize, detail: String },

    #[error("tape already interpreted; reset adjoints first")]
    TapeReused,

    #[error("operand belongs to a different tape")]
    ForeignTape,

    #[error("path {path} (decisions {decisions:?}): {source}")]
    InPath {
        path: usize,
        decisions: Vec<bool>,
        #[source]
        source: Box<Error>,
    },

    #[error("iteration {iteration}: {source}")]
    AtIteration {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum DomainError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("logarithm of non-positive value {0}")]
    Log(f64),
    #[error("square root of negative value {0}")]
    Sqrt(f64),
    #[error("power of negative base {base} with non-integer exponent {exponent}")]
    Pow { base: f64, exponent: f64 },
}

impl Error {
    /// Strips path/iteration context wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::InPath { source, .. } | Error::AtIteration { source, .. } => source.root(),
            other => other,
        }
    }

    pub fn is_budget(&self) -> bool {
        matches!(
            self.root(),
            Error::PathBudget { .. } | Error::ConditionBudget { .. } | Error::TapeBudget { .. }
        )
    }

    pub fn is_numeric(&self) -> bool {
        matches!(
            self.root(),
            Error::NanOperand | Error::Domain(_) | Error::NonFinite { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

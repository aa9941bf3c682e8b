use thiserror::Error;

use crate::mdp::Diagnostic;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{location}: {message}")]
    Semantic { location: String, message: String },

    #[error("model failed validation with {} diagnostic(s)", .0.len())]
    Invalid(Vec<Diagnostic>),

    #[error("range error: {0}")]
    Range(String),

    /// Matrix powers overflowed; `last_finite` is the largest horizon that
    /// still produced finite values.
    #[error("range error: matrix powers overflow after horizon {last_finite}")]
    PowerOverflow { last_finite: usize },

    #[error("probability mass {total} does not sum to 1")]
    ProbabilityMass { total: f64 },

    #[error("policy enumeration guard exceeded: {count} stationary deterministic policies (guard {guard})")]
    GuardExceeded { count: u128, guard: u128 },

    #[error("policy does not match model: {0}")]
    PolicyMismatch(String),

    #[error("enumeration budget exceeded: {needed:.3e} trajectory-steps needed, budget {budget}; use the simulate command instead")]
    BudgetExceeded { needed: f64, budget: u64 },

    #[error("singular system: {0}")]
    Singular(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("value iteration did not converge after {iterations} iterations (last residual {last:.3e})")]
    NonConvergence {
        iterations: usize,
        last: f64,
        residuals: Vec<f64>,
    },

    #[error("incompatible utility: {0}")]
    IncompatibleUtility(String),

    #[error("unsupported utility: {0}")]
    UnsupportedUtility(String),
}

impl Error {
    pub(crate) fn semantic(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Semantic {
            location: location.into(),
            message: message.into(),
        }
    }

    pub(crate) fn from_json(err: &serde_json::Error) -> Self {
        Error::Syntax {
            line: err.line(),
            column: err.column(),
            message: err.to_string(),
        }
    }
}

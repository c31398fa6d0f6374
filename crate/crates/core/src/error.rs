use thiserror::Error;

/// Errors raised by the engines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("operation `{op}` is not defined for the {model} model")]
    WrongModel { op: &'static str, model: &'static str },

    #[error("{what}: level {requested} exceeds the configured cap {cap}")]
    BudgetExceeded {
        what: &'static str,
        requested: u32,
        cap: u32,
    },

    /// The refinement cap was reached. The last estimate is still carried.
    #[error("quadrature did not converge: value {value}, error estimate {error_estimate}")]
    NonConvergence { value: f64, error_estimate: f64 },

    #[error("sector j={j} is empty after clamping ([{lo}, {hi}])")]
    EmptySector { j: u32, lo: f64, hi: f64 },

    #[error("pair classification needs two distinct squares")]
    DegeneratePair,

    #[error("constant fitting needs at least two levels n >= 2, got {got}")]
    InsufficientData { got: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

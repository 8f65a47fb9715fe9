use thiserror::Error;

/// Errors raised by the solver and its supporting modules.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument left the domain of a cost, energy or potential function.
    #[error("{function}: argument {value} outside domain ({reason})")]
    Domain {
        function: &'static str,
        value: f64,
        reason: &'static str,
    },

    /// A state vector does not lie in the open feasible set.
    #[error("infeasible state at index {index}: {reason}")]
    Infeasible { index: usize, reason: &'static str },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// A tridiagonal factorization met a non-positive pivot.
    #[error("pivot breakdown at row {row} (pivot {pivot:e})")]
    PivotBreakdown { row: usize, pivot: f64 },

    #[error("Newton iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("line search failed at Newton iteration {iteration} (residual {residual:e})")]
    LineSearch { iteration: usize, residual: f64 },

    /// A time step failed inside a trajectory; wraps the underlying error.
    #[error("step {step}: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid density: {0}")]
    InvalidDensity(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

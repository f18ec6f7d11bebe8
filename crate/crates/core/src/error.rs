use thiserror::Error;

/// Errors raised by model evaluation, the subproblem solver, the generator
/// and the problem-file reader.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("denominator of term {term} is nonpositive ({value:e})")]
    DenominatorNonpositive { term: usize, value: f64 },

    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: String,
        expected: usize,
        got: usize,
    },

    #[error("feasible region has no strictly feasible point (best max violation {best_violation:e})")]
    Infeasible { best_violation: f64 },

    #[error("Newton iteration did not converge within {iters} steps (decrement {decrement:e})")]
    MaxIterations { iters: usize, decrement: f64 },

    #[error("subproblem is not convex: curvature {min_eigenvalue:e} along some direction")]
    NonConvexDetected { min_eigenvalue: f64 },

    #[error("line search found no acceptable step in {trials} trials")]
    LineSearchFailed { trials: usize },

    #[error("Householder vector is zero")]
    ZeroVector,

    #[error("no feasible instance after {attempts} draws")]
    GenerationFailed { attempts: usize },

    #[error("grid search supports at most 3 variables, problem has {n}")]
    DimensionTooLarge { n: usize },

    #[error("no feasible grid point")]
    EmptyGrid,

    #[error("unbounded coordinate {coord}: grid search needs finite bounds")]
    UnboundedGrid { coord: usize },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("I/O error: {0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

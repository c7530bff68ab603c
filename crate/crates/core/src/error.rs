use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("index {index} out of range for space with {n_states} states")]
    IndexOutOfRange { index: usize, n_states: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("constraint violated: {0}")]
    ConstraintViolation(String),

    #[error("space is not enumerable: {0}")]
    NotEnumerable(String),

    #[error("cap exceeded: {what} is {value}, limit {limit}")]
    CapExceeded { what: &'static str, value: usize, limit: usize },

    #[error("group closure violated: product of elements {0} and {1} is not in the set")]
    ClosureViolation(usize, usize),

    #[error("not a group: {0}")]
    NotAGroup(String),

    #[error("symmetry does not preserve the lattice: {0}")]
    SymmetryMismatch(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("hilbert space mismatch")]
    HilbertMismatch,

    #[error("local estimator undefined: wave function vanishes at a sample")]
    EstimatorSingular,

    #[error("conjugate gradient did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("matrix factorization failed: {0}")]
    Factorization(String),

    #[error("integration failed: {0}")]
    Integration(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("snapshot error: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

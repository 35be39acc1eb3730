use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{what} = {got} exceeds the limit of {limit}")]
    LimitExceeded {
        what: &'static str,
        got: usize,
        limit: usize,
    },

    #[error(
        "kernel of edge ({a}, {b}) has nullity {nullity}, above the enumeration limit {limit}"
    )]
    EnumerationLimit {
        a: usize,
        b: usize,
        nullity: usize,
        limit: usize,
    },

    #[error("expected {expected} parameters, got {got}")]
    ParamCount { expected: usize, got: usize },

    #[error("cut is not reachable: the ansatz spans a subspace of dimension {span_dim}")]
    Unreachable { span_dim: usize },

    #[error("not a critical point: gradient infinity-norm {grad_norm:e} > {tol:e}")]
    NotCritical { grad_norm: f64, tol: f64 },

    #[error("objective or gradient returned a non-finite value at iteration {iteration}")]
    NonFinite { iteration: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("config: {0}")]
    Config(String),

    #[error("{experiment} depth {depth} realization {realization}: {source}")]
    Run {
        experiment: String,
        depth: usize,
        realization: usize,
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

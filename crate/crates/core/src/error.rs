use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("quadrature did not converge: estimate {value}, residual {residual:.3e} after {intervals} intervals")]
    Quadrature { value: f64, residual: f64, intervals: usize },

    #[error("unbounded tail: {0} has no declared decay")]
    UnboundedTail(String),

    #[error("hypotheses unmet: {0}")]
    Hypothesis(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("support too large for the exact solver: {got} points (limit {limit})")]
    SupportTooLarge { got: usize, limit: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("divergent integral, partial sums {partial:?}")]
    Divergent { partial: Vec<f64> },

    #[error("section declares no monotone partition and no sample grid was supplied")]
    NoMonotonicity,

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

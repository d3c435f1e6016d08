use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("topology error in cell {cell}: {message}")]
    Topology { cell: usize, message: String },

    #[error("functions live on different spaces")]
    SpaceMismatch,

    #[error("singular matrix: zero pivot in column {column}")]
    SingularMatrix { column: usize },

    #[error("nonlinear solver did not converge at step {step} after {iterations} iterations (residuals: {residuals:?})")]
    NonConvergence {
        step: usize,
        iterations: usize,
        residuals: Vec<f64>,
    },

    #[error("optimizer iterate {iterate}: {source}")]
    Optimizer {
        iterate: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("unknown manufactured case `{0}`")]
    UnknownCase(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

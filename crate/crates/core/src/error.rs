use thiserror::Error;

/// Errors raised anywhere in the TOAD pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid shapes, hyperparameters, unknown names or otherwise inconsistent setup.
    #[error("configuration error: {0}")]
    Config(String),

    /// Operand shapes do not conform for a tensor operation.
    #[error("configuration error: {op}: incompatible shapes {left:?} and {right:?}")]
    Shape {
        op: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },

    /// Bad values handed to an operation (out-of-range class, empty sequence, ...).
    #[error("input error: {0}")]
    Input(String),

    /// A malformed line in an ingested file.
    #[error("ingest error: {path}:{line}: {message}")]
    Ingest {
        path: String,
        line: usize,
        message: String,
    },

    /// API misuse, e.g. calling backward on a non-scalar.
    #[error("usage error: {0}")]
    Usage(String),

    /// A loss term became non-finite during training.
    #[error("training diverged at epoch {epoch}: loss term {term} is {value}")]
    Diverged {
        epoch: usize,
        term: &'static str,
        value: f64,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn shape(op: &'static str, left: &[usize], right: &[usize]) -> Self {
        Error::Shape {
            op,
            left: left.to_vec(),
            right: right.to_vec(),
        }
    }
}

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{op}: dimension mismatch between {lhs:?} and {rhs:?}")]
    ShapeMismatch {
        op: &'static str,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },

    #[error("layer_norm: normalized dimension must be >= 2, got {0}")]
    DegenerateNorm(usize),

    #[error("{op}: non-finite input value")]
    NumericInput { op: &'static str },

    #[error("backward: loss must be a scalar, got shape {0:?}")]
    NonScalarLoss(Vec<usize>),

    #[error("training diverged: non-finite {what} in `{name}`")]
    DivergedTraining { name: String, what: &'static str },

    #[error("actor case mismatch: {0}")]
    CaseMismatch(&'static str),

    #[error("episode already finished at step {0}")]
    EpisodeFinished(usize),

    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("config parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("hypervolume: exact computation supports m in {{2, 3}}, got m = {0}; use the Monte-Carlo estimator")]
    UnsupportedDimension(usize),

    #[error("checkpoint format error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

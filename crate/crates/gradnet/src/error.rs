use thiserror::Error;

#[derive(Debug, Error)]
pub enum GradnetError {
    #[error("shape mismatch in {op}: {detail}")]
    ShapeMismatch { op: &'static str, detail: String },

    #[error("non-finite value produced by node {node} ({op})")]
    NonFinite { node: usize, op: &'static str },

    #[error("loss node must be scalar, got shape {0:?}")]
    NonScalarLoss(Vec<usize>),

    #[error("degenerate norm {norm:e} (<= {eps:e}) in l2_normalize")]
    DegenerateNorm { norm: f64, eps: f64 },

    #[error("unknown parameter `{0}`")]
    UnknownParam(String),

    #[error("parameter `{0}` already registered")]
    DuplicateParam(String),

    #[error("checkpoint io: {0}")]
    Io(#[from] std::io::Error),

    #[error("bad checkpoint: {0}")]
    BadCheckpoint(String),
}

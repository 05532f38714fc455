use gradnet::GradnetError;
use physim::PhysimError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReplearnError {
    #[error("bad architecture config: {0}")]
    BadArch(String),

    #[error("bad training config: {0}")]
    BadTrain(String),

    #[error("bad sample: {0}")]
    BadSample(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("checkpoint does not match the architecture: {0}")]
    CheckpointMismatch(String),

    #[error("training dataset is empty")]
    EmptyDataset,

    #[error(transparent)]
    Graph(#[from] GradnetError),

    #[error(transparent)]
    Physics(#[from] PhysimError),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

//! Self-supervised representation learning over temporally adjacent
//! observation pairs.
//!
//! Two encoders share a 64-wide embedding space: a static encoder fuses the
//! intensity and depth grids, and a dynamic encoder turns the force/torque
//! window plus gripper velocity into a unit latent displacement. Adding the
//! displacement to the current embedding predicts the next one; a transposed
//! convolutional decoder reconstructs grids from embeddings. The hybrid loss
//! ties the two together — reconstruction of both observations plus a
//! weighted temporal consistency term — so the embedding space must encode
//! whatever the wrench/velocity channel can see changing.
//!
//! Training is plain shuffled mini-batch Adam over a pair dataset, bit
//! deterministic for a given seed, with snapshot-based rollback if the loss
//! ever leaves the finite range.

mod arch;
mod error;
mod loss;
mod model;
mod sample;
mod train;

pub use arch::{ArchConfig, DECODER_KERNEL, VELOCITY_DIM};
pub use error::ReplearnError;
pub use loss::{hybrid_loss, hybrid_loss_grads, LossBreakdown};
pub use model::{predict_next, ReprModel};
pub use sample::Sample;
pub use train::{
    history_csv, save_history, train, train_on_samples, LossRecord, TrainAbort, TrainConfig,
    TrainOutcome,
};

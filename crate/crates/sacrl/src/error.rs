use gradnet::GradnetError;
use physim::PhysimError;
use rewardfn::RewardfnError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SacrlError {
    #[error("bad hyperparameter: {0}")]
    BadHyper(String),

    #[error("bad transition: {0}")]
    BadTransition(String),

    #[error("replay buffer holds {have} transitions, batch needs {need}")]
    NotEnoughData { have: usize, need: usize },

    #[error("non-finite value in {stage} at update {update}")]
    NonFinite { stage: &'static str, update: u64 },

    #[error(transparent)]
    Graph(#[from] GradnetError),

    #[error(transparent)]
    Physics(#[from] PhysimError),

    #[error(transparent)]
    Reward(#[from] RewardfnError),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

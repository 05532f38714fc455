//! Desk-scale Soft Actor-Critic over the simulator's proprioceptive
//! features, with pluggable reward sources: the learned dense reward, a
//! hand-crafted distance, or the sparse success indicator.
//!
//! The agent is deliberately small — twin 64-wide critics, a squashed
//! Gaussian policy, fixed entropy temperature — and strictly deterministic
//! given its seed. Policies consume a 9-dimensional state (pose, velocity,
//! newest wrench); only the reward model ever looks at the rendered grids.
//! [`train_run`] packages the whole loop for one (source, seed) experiment
//! and logs one CSV row per episode.

mod buffer;
mod error;
mod nets;
mod rollout;
mod run;
mod sac;
mod source;

pub use buffer::{features_of, ReplayBuffer, Transition, ACTION_DIM, FEATURES, FEATURE_SCALE};
pub use error::SacrlError;
pub use nets::{polyak, PolicyNet, QNet, HIDDEN, LOG_STD_MAX, LOG_STD_MIN};
pub use rollout::{rollout_episode, Controller, EpisodeStats, RolloutOptions};
pub use run::{
    env_seed_for, run_csv, save_run_csv, train_run, EpisodeRecord, RunAbort, RunConfig, RunLog,
};
pub use sac::{critic_target, LossReport, SacAgent, SacHyper, TargetTerm};
pub use source::{handcrafted_reward, sparse_reward, RewardSource};

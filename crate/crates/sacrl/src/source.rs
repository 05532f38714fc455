use physim::math::vec2;
use physim::{
    success, EnvKind, EnvState, Observation, LATCH_THRESHOLD, OPEN_THRESHOLD, SLOT_DEPTH, SLOT_TOP,
};
use rewardfn::RewardModel;

use crate::error::SacrlError;

/// Relative weights of the handle and door angle errors in the latch-door
/// hand-crafted distance; the door term dominates because opening it is the
/// harder, later phase.
const W_HANDLE: f64 = 1.0;
const W_DOOR: f64 = 2.0;

/// Where a transition's reward comes from. Dense wraps a frozen learned
/// reward; the other two read the simulator state directly.
pub enum RewardSource<'a> {
    Dense(&'a RewardModel),
    Handcrafted,
    Sparse,
}

impl RewardSource<'_> {
    pub fn label(&self) -> &'static str {
        match self {
            RewardSource::Dense(_) => "dense",
            RewardSource::Handcrafted => "handcrafted",
            RewardSource::Sparse => "sparse",
        }
    }

    /// Reward paid for arriving at `next_state` (sensed as `next_obs`).
    /// `prev_obs` only matters for the learned reward's difference mode.
    pub fn reward(
        &self,
        prev_obs: &Observation,
        next_obs: &Observation,
        next_state: &EnvState,
    ) -> Result<f64, SacrlError> {
        match self {
            RewardSource::Dense(rm) => Ok(rm.dense_reward(prev_obs, next_obs)?),
            RewardSource::Handcrafted => Ok(handcrafted_reward(next_state)),
            RewardSource::Sparse => Ok(sparse_reward(next_state)),
        }
    }
}

/// Negative distance to the goal in task coordinates: the block's offset
/// from its fully-seated pose, or the weighted handle/door angle error.
/// Zero exactly at the goal pose, increasingly negative away from it.
pub fn handcrafted_reward(state: &EnvState) -> f64 {
    match state.kind {
        EnvKind::BlockInsert => {
            let b = &state.bodies[0];
            let goal = vec2(0.0, SLOT_TOP - SLOT_DEPTH + b.half.y);
            -(b.pos - goal).norm()
        }
        EnvKind::LatchDoor => {
            let handle = &state.bodies[0];
            let door = &state.bodies[1];
            let relative = handle.angle - door.angle;
            let e_handle = relative + LATCH_THRESHOLD;
            let e_door = door.angle - OPEN_THRESHOLD;
            -(W_HANDLE * e_handle * e_handle + W_DOOR * e_door * e_door).sqrt()
        }
    }
}

/// Boolean success indicator as a reward.
pub fn sparse_reward(state: &EnvState) -> f64 {
    if success(state) {
        1.0
    } else {
        0.0
    }
}

use physim::{Observation, WINDOW};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::SacrlError;

/// Width of the proprioceptive feature vector the policy and critics see:
/// gripper pose (3) + velocity (3) + newest wrench (3). The rendered grids
/// stay out of the control loop; only the reward model reads them.
pub const FEATURES: usize = 9;
/// Action dimensionality (planar velocity command + angular rate).
pub const ACTION_DIM: usize = 3;

/// Fixed per-feature normalization applied in [`features_of`], chosen so
/// typical magnitudes along demos and contact-rich rollouts land in roughly
/// [-1, 1]: positions span ~0.5 m, angles ±π, velocities are already ≤ ~1.5,
/// contact forces spike to ~25 N and torques to ~2.5 N·m.
pub const FEATURE_SCALE: [f64; FEATURES] = [
    2.0,
    2.0,
    std::f64::consts::FRAC_1_PI,
    1.0,
    1.0,
    1.0,
    0.1,
    0.1,
    0.5,
];

/// Project an observation onto the low-dimensional state the agent consumes.
pub fn features_of(obs: &Observation) -> [f64; FEATURES] {
    let newest = obs.window[WINDOW - 1];
    let raw = [
        obs.pose[0],
        obs.pose[1],
        obs.pose[2],
        obs.velocity[0],
        obs.velocity[1],
        obs.velocity[2],
        newest[0],
        newest[1],
        newest[2],
    ];
    let mut out = [0.0; FEATURES];
    for (o, (r, s)) in out.iter_mut().zip(raw.iter().zip(&FEATURE_SCALE)) {
        *o = r * s;
    }
    out
}

/// One (s, a, r, s', done) tuple. `done` marks a terminal boundary (success
/// or a physics fault); horizon timeouts deliberately leave it false so the
/// critic still bootstraps through them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub features: [f64; FEATURES],
    pub action: [f64; ACTION_DIM],
    pub reward: f64,
    pub next_features: [f64; FEATURES],
    pub done: bool,
}

impl Transition {
    pub fn is_finite(&self) -> bool {
        self.features
            .iter()
            .chain(&self.action)
            .chain(&self.next_features)
            .chain(std::iter::once(&self.reward))
            .all(|v| v.is_finite())
    }
}

/// Fixed-capacity ring of transitions with its own sampling stream, so a
/// buffer seeded identically replays the exact same mini-batch indices.
pub struct ReplayBuffer {
    data: Vec<Transition>,
    capacity: usize,
    cursor: usize,
    rng: ChaCha8Rng,
}

impl ReplayBuffer {
    pub fn new(capacity: usize, seed: u64) -> Result<ReplayBuffer, SacrlError> {
        if capacity == 0 {
            return Err(SacrlError::BadHyper("replay capacity must be >= 1".into()));
        }
        Ok(ReplayBuffer {
            data: Vec::with_capacity(capacity.min(1 << 16)),
            capacity,
            cursor: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Insert one transition, overwriting the oldest once full.
    pub fn push(&mut self, t: Transition) -> Result<(), SacrlError> {
        if !t.is_finite() {
            return Err(SacrlError::BadTransition("non-finite field".into()));
        }
        if self.data.len() < self.capacity {
            self.data.push(t);
        } else {
            self.data[self.cursor] = t;
        }
        self.cursor = (self.cursor + 1) % self.capacity;
        Ok(())
    }

    /// Uniform sample with replacement.
    pub fn sample(&mut self, batch: usize) -> Result<Vec<Transition>, SacrlError> {
        if batch == 0 {
            return Err(SacrlError::BadHyper("batch must be >= 1".into()));
        }
        if self.data.is_empty() {
            return Err(SacrlError::NotEnoughData { have: 0, need: batch });
        }
        Ok((0..batch).map(|_| self.data[self.rng.gen_range(0..self.data.len())]).collect())
    }
}

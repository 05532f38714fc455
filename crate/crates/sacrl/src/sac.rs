use gradnet::{Adam, AdamConfig, Graph, ParamSet, Tensor};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::buffer::{ReplayBuffer, Transition, ACTION_DIM, FEATURES};
use crate::error::SacrlError;
use crate::nets::{
    all_finite, bind_frozen, draw_eps, policy_forward, polyak, q_forward, PolicyNet, QNet,
};

/// Soft Actor-Critic hyperparameters. α is a fixed entropy temperature —
/// no auto-tuning — which keeps the learner at its smallest faithful form.
#[derive(Debug, Clone, Copy)]
pub struct SacHyper {
    /// Discount γ ∈ [0, 1].
    pub gamma: f64,
    /// Target-smoothing coefficient τ ∈ (0, 1].
    pub tau: f64,
    /// Entropy temperature α ≥ 0.
    pub alpha: f64,
    pub lr: f64,
    pub batch: usize,
    /// Environment decisions taken with uniform random actions before the
    /// policy and the updates switch on (rounded up to whole episodes).
    pub warmup: u32,
    /// Gradient updates applied per environment decision.
    pub updates_per_step: u32,
}

impl Default for SacHyper {
    fn default() -> Self {
        SacHyper {
            gamma: 0.99,
            tau: 0.005,
            alpha: 0.2,
            lr: 3e-4,
            batch: 64,
            warmup: 1500,
            updates_per_step: 1,
        }
    }
}

impl SacHyper {
    pub fn validate(&self) -> Result<(), SacrlError> {
        let bad = |m: String| Err(SacrlError::BadHyper(m));
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad(format!("gamma {} outside [0, 1]", self.gamma));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return bad(format!("tau {} outside (0, 1]", self.tau));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return bad(format!("alpha {} must be finite and >= 0", self.alpha));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad(format!("lr {} must be finite and positive", self.lr));
        }
        if self.batch == 0 {
            return bad("batch must be >= 1".into());
        }
        Ok(())
    }
}

/// Bellman backup for one transition: y = r + γ·(1−done)·(minQ' − α·logπ').
pub fn critic_target(
    hyper: &SacHyper,
    reward: f64,
    done: bool,
    min_q_next: f64,
    logp_next: f64,
) -> f64 {
    let mask = if done { 0.0 } else { 1.0 };
    reward + hyper.gamma * mask * (min_q_next - hyper.alpha * logp_next)
}

/// The ingredients of one row's backup, reported so callers can audit the
/// arithmetic against the closed form.
#[derive(Debug, Clone, Copy)]
pub struct TargetTerm {
    pub reward: f64,
    pub done: bool,
    pub min_q_next: f64,
    pub logp_next: f64,
    pub y: f64,
}

#[derive(Debug, Clone)]
pub struct LossReport {
    pub q1_loss: f64,
    pub q2_loss: f64,
    pub actor_loss: f64,
    /// Mean live Q1 over the batch, a cheap value-scale diagnostic.
    pub mean_q: f64,
    pub targets: Vec<TargetTerm>,
}

/// One learner: policy, twin critics, their Polyak targets, and per-network
/// Adam state. All updates run on a single thread; rollouts hand transitions
/// over by value.
pub struct SacAgent {
    hyper: SacHyper,
    policy: PolicyNet,
    q1: QNet,
    q2: QNet,
    t1: ParamSet,
    t2: ParamSet,
    opt_pi: Adam,
    opt_q1: Adam,
    opt_q2: Adam,
    rng: ChaCha8Rng,
    updates: u64,
}

pub(crate) fn mix(seed: u64, stream: u64) -> u64 {
    // splitmix64 finalizer over (seed, stream) so nearby seeds decorrelate.
    let mut z = seed ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl SacAgent {
    pub fn new(seed: u64, hyper: SacHyper) -> Result<SacAgent, SacrlError> {
        hyper.validate()?;
        let policy = PolicyNet::new(mix(seed, 1));
        let q1 = QNet::new(mix(seed, 2));
        let q2 = QNet::new(mix(seed, 3));
        Ok(SacAgent::assemble(hyper, policy, q1, q2, mix(seed, 4)))
    }

    /// All-zero networks; with α = 0 and zero rewards a full update is a
    /// no-op, which the tests pin down.
    pub fn zeroed(hyper: SacHyper) -> Result<SacAgent, SacrlError> {
        hyper.validate()?;
        Ok(SacAgent::assemble(hyper, PolicyNet::zeroed(), QNet::zeroed(), QNet::zeroed(), 0))
    }

    fn assemble(hyper: SacHyper, policy: PolicyNet, q1: QNet, q2: QNet, rng_seed: u64) -> SacAgent {
        let adam = AdamConfig { lr: hyper.lr, ..AdamConfig::default() };
        let t1 = q1.clone_params();
        let t2 = q2.clone_params();
        let opt_pi = Adam::new(adam, policy.params());
        let opt_q1 = Adam::new(adam, q1.params());
        let opt_q2 = Adam::new(adam, q2.params());
        SacAgent {
            hyper,
            policy,
            q1,
            q2,
            t1,
            t2,
            opt_pi,
            opt_q1,
            opt_q2,
            rng: ChaCha8Rng::seed_from_u64(rng_seed),
            updates: 0,
        }
    }

    pub fn hyper(&self) -> &SacHyper {
        &self.hyper
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub fn policy(&self) -> &PolicyNet {
        &self.policy
    }

    pub fn q1(&self) -> &QNet {
        &self.q1
    }

    pub fn q2(&self) -> &QNet {
        &self.q2
    }

    pub fn target_params(&self) -> (&ParamSet, &ParamSet) {
        (&self.t1, &self.t2)
    }

    #[cfg(test)]
    pub(crate) fn policy_mut(&mut self) -> &mut PolicyNet {
        &mut self.policy
    }

    /// Sample one control action from the current policy.
    pub fn act(&mut self, features: &[f64; FEATURES]) -> Result<[f64; ACTION_DIM], SacrlError> {
        self.policy.act(features, &mut self.rng)
    }

    /// Draw a batch from the buffer and apply one full SAC update.
    pub fn update_from(&mut self, buffer: &mut ReplayBuffer) -> Result<LossReport, SacrlError> {
        let batch = buffer.sample(self.hyper.batch)?;
        self.update_batch(&batch)
    }

    /// One critic + actor + Polyak step on an explicit batch.
    pub fn update_batch(&mut self, batch: &[Transition]) -> Result<LossReport, SacrlError> {
        if batch.is_empty() {
            return Err(SacrlError::BadHyper("update on an empty batch".into()));
        }
        let b = batch.len();
        let feats: Vec<f64> = batch.iter().flat_map(|t| t.features).collect();
        let acts: Vec<f64> = batch.iter().flat_map(|t| t.action).collect();
        let next_feats: Vec<f64> = batch.iter().flat_map(|t| t.next_features).collect();

        let targets = self.targets(batch, b, &next_feats)?;
        let y: Vec<f64> = targets.iter().map(|t| t.y).collect();

        let (q1_loss, mean_q) = self.critic_step(true, b, &feats, &acts, &y)?;
        let (q2_loss, _) = self.critic_step(false, b, &feats, &acts, &y)?;
        let actor_loss = self.actor_step(b, &feats)?;

        polyak(&mut self.t1, self.q1.params(), self.hyper.tau);
        polyak(&mut self.t2, self.q2.params(), self.hyper.tau);

        self.updates += 1;
        for (set, stage) in [
            (self.policy.params(), "policy parameters"),
            (self.q1.params(), "q1 parameters"),
            (self.q2.params(), "q2 parameters"),
        ] {
            if !all_finite(set) {
                return Err(SacrlError::NonFinite { stage, update: self.updates });
            }
        }
        Ok(LossReport { q1_loss, q2_loss, actor_loss, mean_q, targets })
    }

    /// Evaluate y for every row: next action from the live policy, next value
    /// from the frozen targets, combined outside the graph via the closed
    /// form (no gradients flow into the backup).
    fn targets(
        &mut self,
        batch: &[Transition],
        b: usize,
        next_feats: &[f64],
    ) -> Result<Vec<TargetTerm>, SacrlError> {
        let mut g = Graph::new();
        let pw = bind_frozen(&mut g, self.policy.params());
        let t1w = bind_frozen(&mut g, &self.t1);
        let t2w = bind_frozen(&mut g, &self.t2);
        let s_next = g.input(Tensor::from_vec(&[b, FEATURES], next_feats.to_vec())?);
        let eps = draw_eps(&mut g, &mut self.rng, b);
        let sample = policy_forward(&mut g, &pw, s_next, eps)?;
        let sa = g.concat_cols(s_next, sample.action)?;
        let q1n = q_forward(&mut g, &t1w, sa)?;
        let q2n = q_forward(&mut g, &t2w, sa)?;

        let q1v = g.value(q1n).data();
        let q2v = g.value(q2n).data();
        let lpv = g.value(sample.logp).data();
        let mut out = Vec::with_capacity(b);
        for (i, t) in batch.iter().enumerate() {
            let min_q_next = q1v[i].min(q2v[i]);
            let y = critic_target(&self.hyper, t.reward, t.done, min_q_next, lpv[i]);
            if !y.is_finite() {
                return Err(SacrlError::NonFinite { stage: "critic target", update: self.updates });
            }
            out.push(TargetTerm {
                reward: t.reward,
                done: t.done,
                min_q_next,
                logp_next: lpv[i],
                y,
            });
        }
        Ok(out)
    }

    fn critic_step(
        &mut self,
        first: bool,
        b: usize,
        feats: &[f64],
        acts: &[f64],
        y: &[f64],
    ) -> Result<(f64, f64), SacrlError> {
        let net = if first { &self.q1 } else { &self.q2 };
        let mut g = Graph::new();
        let w = g.params(net.params());
        let s = g.input(Tensor::from_vec(&[b, FEATURES], feats.to_vec())?);
        let a = g.input(Tensor::from_vec(&[b, ACTION_DIM], acts.to_vec())?);
        let sa = g.concat_cols(s, a)?;
        let q = q_forward(&mut g, &w, sa)?;
        let y_node = g.input(Tensor::from_vec(&[b, 1], y.to_vec())?);
        let loss = g.mse(q, y_node)?;
        let loss_v = g.value(loss).item();
        let mean_q = g.value(q).data().iter().sum::<f64>() / b as f64;
        let grads = g.backward(loss, net.params().len())?;
        if first {
            self.opt_q1.step(self.q1.params_mut(), &grads)?;
        } else {
            self.opt_q2.step(self.q2.params_mut(), &grads)?;
        }
        Ok((loss_v, mean_q))
    }

    /// Actor objective: mean(α·logπ(a|s) − min Q(s, a)), a reparameterized.
    /// Critics enter as constants so only policy gradients are collected.
    fn actor_step(&mut self, b: usize, feats: &[f64]) -> Result<f64, SacrlError> {
        let mut g = Graph::new();
        let pw = g.params(self.policy.params());
        let q1w = bind_frozen(&mut g, self.q1.params());
        let q2w = bind_frozen(&mut g, self.q2.params());
        let s = g.input(Tensor::from_vec(&[b, FEATURES], feats.to_vec())?);
        let eps = draw_eps(&mut g, &mut self.rng, b);
        let sample = policy_forward(&mut g, &pw, s, eps)?;
        let sa = g.concat_cols(s, sample.action)?;
        let qa1 = q_forward(&mut g, &q1w, sa)?;
        let qa2 = q_forward(&mut g, &q2w, sa)?;
        let min_q = g.min2(qa1, qa2)?;
        let ent = g.scale(sample.logp, self.hyper.alpha)?;
        let gap = g.sub(ent, min_q)?;
        let loss = g.mean(gap)?;
        let loss_v = g.value(loss).item();
        let grads = g.backward(loss, self.policy.params().len())?;
        self.opt_pi.step(self.policy.params_mut(), &grads)?;
        Ok(loss_v)
    }
}

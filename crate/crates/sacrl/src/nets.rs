use gradnet::{Graph, NodeId, ParamSet, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::buffer::{ACTION_DIM, FEATURES};
use crate::error::SacrlError;

/// Hidden width of every policy and critic layer.
pub const HIDDEN: usize = 64;
/// Clamp range for the policy's log standard deviation.
pub const LOG_STD_MIN: f64 = -10.0;
pub const LOG_STD_MAX: f64 = 2.0;
/// Guard inside ln(1 - tanh²(u) + ε) so saturated actions stay finite.
const TANH_EPS: f64 = 1e-6;

const LN_2PI: f64 = 1.837877066409345;

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn he_weights(rng: &mut ChaCha8Rng, rows: usize, cols: usize, gain: f64) -> Tensor {
    let std = (2.0 / rows as f64).sqrt() * gain;
    let data = (0..rows * cols).map(|_| standard_normal(rng) * std).collect();
    Tensor::from_vec(&[rows, cols], data).expect("shape matches data length")
}

fn layer(set: &mut ParamSet, rng: &mut ChaCha8Rng, name: &str, rows: usize, cols: usize, gain: f64) {
    set.insert(&format!("{name}.w"), he_weights(rng, rows, cols, gain))
        .expect("fresh name");
    set.insert(&format!("{name}.b"), Tensor::zeros(&[cols])).expect("fresh name");
}

/// Bind every tensor of a set as a constant input: values flow forward and
/// adjoints flow through, but no parameter gradient is collected. Used for
/// target networks and for critics inside the actor's graph.
pub(crate) fn bind_frozen(g: &mut Graph, set: &ParamSet) -> Vec<NodeId> {
    (0..set.len()).map(|id| g.input(set.by_id(id).clone())).collect()
}

pub(crate) fn all_finite(set: &ParamSet) -> bool {
    set.iter().all(|(_, t)| t.data().iter().all(|v| v.is_finite()))
}

/// After-update target smoothing: θ' = τ·θ + (1−τ)·θ'_old elementwise.
pub fn polyak(target: &mut ParamSet, live: &ParamSet, tau: f64) {
    debug_assert_eq!(target.len(), live.len());
    for id in 0..live.len() {
        let l = live.by_id(id).data().to_vec();
        for (t, lv) in target.by_id_mut(id).data_mut().iter_mut().zip(l) {
            *t = tau * lv + (1.0 - tau) * *t;
        }
    }
}

/// Twin-critic member: (state ++ action) -> scalar Q through two ReLU layers.
pub struct QNet {
    params: ParamSet,
}

impl QNet {
    pub fn new(seed: u64) -> QNet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut set = ParamSet::new();
        layer(&mut set, &mut rng, "l1", FEATURES + ACTION_DIM, HIDDEN, 1.0);
        layer(&mut set, &mut rng, "l2", HIDDEN, HIDDEN, 1.0);
        // Small head keeps early value estimates near zero.
        layer(&mut set, &mut rng, "out", HIDDEN, 1, 0.01);
        QNet { params: set }
    }

    /// All-zero weights: Q ≡ 0 everywhere, the textbook fixed point.
    pub fn zeroed() -> QNet {
        let mut set = ParamSet::new();
        set.insert("l1.w", Tensor::zeros(&[FEATURES + ACTION_DIM, HIDDEN])).unwrap();
        set.insert("l1.b", Tensor::zeros(&[HIDDEN])).unwrap();
        set.insert("l2.w", Tensor::zeros(&[HIDDEN, HIDDEN])).unwrap();
        set.insert("l2.b", Tensor::zeros(&[HIDDEN])).unwrap();
        set.insert("out.w", Tensor::zeros(&[HIDDEN, 1])).unwrap();
        set.insert("out.b", Tensor::zeros(&[1])).unwrap();
        QNet { params: set }
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub(crate) fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    /// Deep copy for target-network initialization.
    pub fn clone_params(&self) -> ParamSet {
        ParamSet::from_bytes(&self.params.to_bytes()).expect("round trip of a live set")
    }
}

/// Forward through a critic given pre-bound weight nodes (params or frozen).
pub(crate) fn q_forward(
    g: &mut Graph,
    w: &[NodeId],
    sa: NodeId,
) -> Result<NodeId, SacrlError> {
    let h1 = g.dense(sa, w[0], w[1])?;
    let h1 = g.relu(h1)?;
    let h2 = g.dense(h1, w[2], w[3])?;
    let h2 = g.relu(h2)?;
    Ok(g.dense(h2, w[4], w[5])?)
}

/// Node handles for one reparameterized policy evaluation.
pub(crate) struct PolicySample {
    pub action: NodeId,
    pub logp: NodeId,
    #[allow(dead_code)] // read in tests to verify the closed form
    pub mean: NodeId,
    #[allow(dead_code)] // read in tests to check the clamp
    pub log_std: NodeId,
}

/// Squashed-Gaussian policy: two ReLU layers into mean and clamped log-std
/// heads; actions are tanh(mean + std·ε) with the matching log-density.
pub struct PolicyNet {
    params: ParamSet,
}

impl PolicyNet {
    pub fn new(seed: u64) -> PolicyNet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut set = ParamSet::new();
        layer(&mut set, &mut rng, "l1", FEATURES, HIDDEN, 1.0);
        layer(&mut set, &mut rng, "l2", HIDDEN, HIDDEN, 1.0);
        layer(&mut set, &mut rng, "mean", HIDDEN, ACTION_DIM, 0.01);
        layer(&mut set, &mut rng, "logstd", HIDDEN, ACTION_DIM, 0.01);
        PolicyNet { params: set }
    }

    pub fn zeroed() -> PolicyNet {
        let mut set = ParamSet::new();
        set.insert("l1.w", Tensor::zeros(&[FEATURES, HIDDEN])).unwrap();
        set.insert("l1.b", Tensor::zeros(&[HIDDEN])).unwrap();
        set.insert("l2.w", Tensor::zeros(&[HIDDEN, HIDDEN])).unwrap();
        set.insert("l2.b", Tensor::zeros(&[HIDDEN])).unwrap();
        set.insert("mean.w", Tensor::zeros(&[HIDDEN, ACTION_DIM])).unwrap();
        set.insert("mean.b", Tensor::zeros(&[ACTION_DIM])).unwrap();
        set.insert("logstd.w", Tensor::zeros(&[HIDDEN, ACTION_DIM])).unwrap();
        set.insert("logstd.b", Tensor::zeros(&[ACTION_DIM])).unwrap();
        PolicyNet { params: set }
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub(crate) fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    /// Sample one action for control. Weights enter the throwaway graph as
    /// constants, so this is the same code path the learner differentiates.
    pub fn act(
        &self,
        features: &[f64; FEATURES],
        rng: &mut ChaCha8Rng,
    ) -> Result<[f64; ACTION_DIM], SacrlError> {
        let mut g = Graph::new();
        let w = bind_frozen(&mut g, &self.params);
        let s = g.input(Tensor::from_vec(&[1, FEATURES], features.to_vec())?);
        let eps = draw_eps(&mut g, rng, 1);
        let sample = policy_forward(&mut g, &w, s, eps)?;
        let a = g.value(sample.action).data();
        Ok([a[0], a[1], a[2]])
    }
}

/// Fresh ε ~ N(0, I) input node of shape [rows, ACTION_DIM].
pub(crate) fn draw_eps(g: &mut Graph, rng: &mut ChaCha8Rng, rows: usize) -> NodeId {
    let data: Vec<f64> = (0..rows * ACTION_DIM).map(|_| standard_normal(rng)).collect();
    g.input(Tensor::from_vec(&[rows, ACTION_DIM], data).expect("shape matches data"))
}

/// Reparameterized forward pass. With u = mean + std·ε the Gaussian density
/// at u reduces to Σ(−log_std − ε²/2) − D/2·ln 2π, and the tanh squash
/// subtracts Σ ln(1 − a² + ε_guard); both are exact under reparameterization
/// because (u − mean)/std is the constant ε.
pub(crate) fn policy_forward(
    g: &mut Graph,
    w: &[NodeId],
    s: NodeId,
    eps: NodeId,
) -> Result<PolicySample, SacrlError> {
    let h1 = g.dense(s, w[0], w[1])?;
    let h1 = g.relu(h1)?;
    let h2 = g.dense(h1, w[2], w[3])?;
    let h2 = g.relu(h2)?;
    let mean = g.dense(h2, w[4], w[5])?;
    let ls_raw = g.dense(h2, w[6], w[7])?;
    let log_std = g.clamp(ls_raw, LOG_STD_MIN, LOG_STD_MAX)?;
    let std = g.exp(log_std)?;
    let noise = g.mul(std, eps)?;
    let u = g.add(mean, noise)?;
    let action = g.tanh_(u)?;

    let eps_sq = g.mul(eps, eps)?;
    let half_eps_sq = g.scale(eps_sq, 0.5)?;
    let neg_density = g.add(log_std, half_eps_sq)?;
    let density = g.neg(neg_density)?;
    let gauss = g.sum_rows(density)?;
    let gauss = g.add_scalar(gauss, -0.5 * ACTION_DIM as f64 * LN_2PI)?;

    let a_sq = g.mul(action, action)?;
    let neg_a_sq = g.neg(a_sq)?;
    let one_minus = g.add_scalar(neg_a_sq, 1.0 + TANH_EPS)?;
    let ln_jac = g.ln(one_minus)?;
    let corr = g.sum_rows(ln_jac)?;
    let logp = g.sub(gauss, corr)?;
    Ok(PolicySample { action, logp, mean, log_std })
}

use gradnet::{Graph, NodeId};

use crate::error::ReplearnError;
use crate::model::{Bind, ReprModel};
use crate::sample::Sample;

/// The loss terms of one evaluation. `l` is always the exact weighted sum of
/// the parts, so downstream consumers can re-derive any component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown {
    /// Mismatch between the predicted and encoded next embedding.
    pub l_temporal: f64,
    /// Reconstruction of the current observation from its own embedding.
    pub l_recon_t: f64,
    /// Reconstruction of the next observation from the predicted embedding.
    pub l_recon_next: f64,
    /// Sum of the two reconstruction terms.
    pub l_recon: f64,
    pub lambda: f64,
    /// Combined objective: l_recon + lambda * l_temporal.
    pub l: f64,
}

impl LossBreakdown {
    /// Assemble a breakdown from raw components, enforcing the composition
    /// identity by construction.
    pub fn from_parts(
        l_recon_t: f64,
        l_recon_next: f64,
        l_temporal: f64,
        lambda: f64,
    ) -> LossBreakdown {
        let l_recon = l_recon_t + l_recon_next;
        LossBreakdown {
            l_temporal,
            l_recon_t,
            l_recon_next,
            l_recon,
            lambda,
            l: l_recon + lambda * l_temporal,
        }
    }
}

/// Scalar nodes of one pair's loss inside a larger graph; training accumulates
/// these across a batch before the backward sweep.
pub(crate) struct PairLossNodes {
    pub l_temporal: NodeId,
    pub l_recon_t: NodeId,
    pub l_recon_next: NodeId,
}

/// Wire one (s_t, s_{t+1}) pair into the graph:
///
///   h_t   = E^s(s_t)            dh_t = normalized E^d(s_t)
///   h_hat = h_t + dh_t
///   l_temporal   = MSE(h_hat, E^s(s_{t+1}))
///   l_recon_t    = MSE(D^s(h_t), s_t)
///   l_recon_next = MSE(D^s(h_hat), s_{t+1})
///
/// No term is stop-gradiented: the backward sweep reaches both encoders
/// through h_hat as well as through E^s(s_{t+1}).
pub(crate) fn pair_loss(
    model: &ReprModel,
    g: &mut Graph,
    bind: &mut Bind,
    s_t: &Sample,
    s_next: &Sample,
) -> Result<PairLossNodes, ReplearnError> {
    let int_t = g.input(s_t.intensity.clone());
    let dep_t = g.input(s_t.depth.clone());
    let win_t = g.input(s_t.window.clone());
    let vel_t = g.input(s_t.velocity.clone());
    let int_n = g.input(s_next.intensity.clone());
    let dep_n = g.input(s_next.depth.clone());
    let target_t = g.input(s_t.target());
    let target_n = g.input(s_next.target());

    let h_t = model.static_embed(g, bind, int_t, dep_t)?;
    let dh_t = model.dynamic_embed(g, bind, win_t, vel_t)?;
    let h_hat = g.add(h_t, dh_t)?;
    let h_next = model.static_embed(g, bind, int_n, dep_n)?;
    let l_temporal = g.mse(h_hat, h_next)?;

    let recon_t = model.decode(g, bind, h_t)?;
    let l_recon_t = g.mse(recon_t, target_t)?;
    let recon_next = model.decode(g, bind, h_hat)?;
    let l_recon_next = g.mse(recon_next, target_n)?;

    Ok(PairLossNodes { l_temporal, l_recon_t, l_recon_next })
}

/// Combine per-term scalar nodes into the objective node and its reportable
/// breakdown. The breakdown reads the very nodes the gradient flows through.
pub(crate) fn combine(
    g: &mut Graph,
    terms: &PairLossNodes,
    lambda: f64,
) -> Result<(NodeId, LossBreakdown), ReplearnError> {
    let l_recon = g.add(terms.l_recon_t, terms.l_recon_next)?;
    let weighted = g.scale(terms.l_temporal, lambda)?;
    let l = g.add(l_recon, weighted)?;
    let breakdown = LossBreakdown {
        l_temporal: g.value(terms.l_temporal).item(),
        l_recon_t: g.value(terms.l_recon_t).item(),
        l_recon_next: g.value(terms.l_recon_next).item(),
        l_recon: g.value(l_recon).item(),
        lambda,
        l: g.value(l).item(),
    };
    Ok((l, breakdown))
}

/// Evaluate the full objective on one observation pair (no gradients).
pub fn hybrid_loss(
    model: &ReprModel,
    s_t: &Sample,
    s_next: &Sample,
    lambda: f64,
) -> Result<LossBreakdown, ReplearnError> {
    let mut g = Graph::new();
    let mut bind = Bind::new(model.params());
    let terms = checked_pair_loss(model, &mut g, &mut bind, s_t, s_next, lambda)?;
    let (_, breakdown) = combine(&mut g, &terms, lambda)?;
    Ok(breakdown)
}

/// The objective and its gradient with respect to every model parameter, in
/// parameter-id order. The single-pair core of a training step, exposed for
/// gradient checking and custom loops.
pub fn hybrid_loss_grads(
    model: &ReprModel,
    s_t: &Sample,
    s_next: &Sample,
    lambda: f64,
) -> Result<(LossBreakdown, gradnet::GradVec), ReplearnError> {
    let mut g = Graph::new();
    let mut bind = Bind::new(model.params());
    let terms = checked_pair_loss(model, &mut g, &mut bind, s_t, s_next, lambda)?;
    let (l, breakdown) = combine(&mut g, &terms, lambda)?;
    let grads = g.backward(l, model.params().len())?;
    Ok((breakdown, grads))
}

fn checked_pair_loss(
    model: &ReprModel,
    g: &mut Graph,
    bind: &mut Bind,
    s_t: &Sample,
    s_next: &Sample,
    lambda: f64,
) -> Result<PairLossNodes, ReplearnError> {
    if lambda < 0.0 || !lambda.is_finite() {
        return Err(ReplearnError::BadTrain(format!("lambda must be finite and >= 0, got {lambda}")));
    }
    pair_loss(model, g, bind, s_t, s_next)
}

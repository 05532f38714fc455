//! Minimal dense/conv tensor engine with reverse-mode differentiation.
//!
//! Double precision throughout. A [`Graph`] is a value-like tape: every op
//! appends a node holding its output, and [`Graph::backward`] walks the tape
//! in reverse topological order (which for a tape is just reverse insertion
//! order), accumulating gradients additively. There is no broadcasting beyond
//! the per-channel bias and per-row bias the fixed architectures here need,
//! and no implicit sharing: tensors are plain owned buffers.
//!
//! Any op that produces a non-finite value fails immediately, naming the
//! offending node.

mod error;
pub mod fdcheck;
mod graph;
mod io;
mod optim;
mod tensor;

pub use error::GradnetError;
pub use graph::{Graph, NodeId};
pub use io::ParamSet;
pub use optim::{Adam, AdamConfig};
pub use tensor::Tensor;

/// Gradients for one [`ParamSet`], indexed by parameter id.
pub type GradVec = Vec<Option<Tensor>>;

/// Accumulate `delta` into `into[id]`, allocating on first touch.
pub fn accumulate_grad(into: &mut GradVec, id: usize, delta: &Tensor) {
    match &mut into[id] {
        Some(t) => t.add_assign(delta),
        slot @ None => *slot = Some(delta.clone()),
    }
}

/// Scale every gradient in place (used to average per-sample gradients).
pub fn scale_grads(grads: &mut GradVec, factor: f64) {
    for g in grads.iter_mut().flatten() {
        for v in g.data_mut() {
            *v *= factor;
        }
    }
}

/// Merge `src` into `dst` elementwise (gradient accumulation across samples).
pub fn merge_grads(dst: &mut GradVec, src: &GradVec) {
    assert_eq!(dst.len(), src.len(), "grad vec length mismatch");
    for (i, g) in src.iter().enumerate() {
        if let Some(g) = g {
            accumulate_grad(dst, i, g);
        }
    }
}

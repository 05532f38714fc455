//! Demonstration-anchored reward functions over learned embeddings.
//!
//! A trained [`replearn::ReprModel`] is frozen and combined with two
//! reference embeddings taken from a single successful demonstration: h0
//! from its first observation and hg from its last. Any observation then
//! scores a progress value
//!
//!   p(s) = 1 - d(E(s), hg) / d(h0, hg)
//!
//! which is 0 at the demonstration's start, 1 at its goal, and negative for
//! states farther from the goal than the start was — deliberately unclamped
//! so regressions are punished. Progress is invariant to translations of the
//! embedding space and covariant under uniform scaling, so it survives the
//! arbitrary affine freedom representation learning leaves behind.
//!
//! [`RewardModel`] is immutable after construction and safe to share across
//! rollout threads. [`bundle_to_bytes`]/[`bundle_from_bytes`] pack the
//! checkpoint, architecture, references, and a provenance tag into a single
//! integrity-checked file.

mod distance;
mod error;
mod io;
mod reward;

pub use distance::DistanceKind;
pub use error::RewardfnError;
pub use io::{bundle_from_bytes, bundle_to_bytes, load_bundle, save_bundle};
pub use reward::{make_refs, RefMode, RewardModel, RewardMode, DENOM_EPS};

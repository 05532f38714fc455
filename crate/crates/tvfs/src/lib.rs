//! Temporal variant forward sampling: expand one demonstration into a tree
//! of temporally adjacent observation pairs by restoring saved states along
//! the trajectory and branching forward with perturbed actions.
//!
//! Sampled actions stay inside a time-varying cone around the demo action:
//! the cone half-angle follows a quadratic bump — tight near the start and
//! goal where precision matters, widest mid-task — and each draw scales the
//! action magnitude mildly. The demonstration's own step pairs are included
//! as the trunk of the tree. Everything is seeded and bit-reproducible.

mod dataset;
mod error;
mod io;
mod sample;
mod schedule;
mod seeds;
mod similarity;

pub use dataset::{
    build_pair_dataset, fnv1a, rollout_branches, PairDataset, PairRecord, SamplingConfig, Source,
};
pub use error::TvfsError;
pub use io::{dataset_from_bytes, dataset_to_bytes, load_dataset, save_dataset};
pub use sample::{cone_action, sample_action, SampledAction};
pub use schedule::{Kernel, VarianceSchedule};
pub use seeds::{select_seeds, window_from_obs, SeedPoint};
pub use similarity::cosine_similarity;

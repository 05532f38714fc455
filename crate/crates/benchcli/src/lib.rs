//! Experiment harness over the whole reward-learning pipeline: typed TOML
//! configs, provenance-hashed artifacts with stage-level resume, a
//! multi-threaded RL benchmark with deterministic collection, metrics
//! aggregation, plot-data export, and the `prlab` binary gluing it all to a
//! command line.
//!
//! The flow mirrors the artifact directory: a scripted demonstration
//! (`demo.prdm`) is expanded into temporally adjacent observation pairs
//! (`pairs.prpd`), a representation is trained on them (`repr.prck`), the
//! reward model is bundled from its endpoint embeddings (`reward.prrb`),
//! the bundle is sanity-checked along held-out trajectories
//! (`rewards_*.csv`), and finally SAC agents race the learned reward
//! against hand-crafted and sparse baselines (`runs/`, `metrics.csv`,
//! `curves_*.csv`). Every stage is a pure function of its recorded inputs,
//! which is what makes the provenance-based resume sound.

pub mod cli;
pub mod config;
pub mod error;
pub mod metrics;
pub mod provenance;
pub mod stages;

pub use config::{ExperimentConfig, SourceKind};
pub use error::BenchError;
pub use metrics::{
    aggregate, auc, curve_csv, final_success_rate, first_success, metrics_csv, run_log_from_csv,
    run_log_from_path, smoothed_success, spearman, Aggregate, RunMetrics, RunRecord, SMOOTH_WINDOW,
};
pub use provenance::{ensure_stage, sha256_file, sha256_hex, Manifest, StageRecord, StageStatus};
pub use stages::{
    export_curves, reload_metrics, run_benchmark, run_pipeline, run_plan, stage_bench,
    stage_bundle, stage_demo, stage_eval, stage_sample, stage_train, write_benchmark,
    write_run_log, EvalSummary, Paths, PlannedRun, AWAY_STEPS,
};

//! Experiment configuration: one TOML file with a typed section per
//! pipeline stage. The numeric crates know nothing about serde; this module
//! mirrors their config structs field-for-field and converts after
//! validation, so the file format stays a concern of the harness alone.
//!
//! Seeds compose: every stage seed in the file is an *offset* that is added
//! (wrapping) to `experiment.global_seed`. Reruns with the same file are
//! bit-identical; changing the global seed reseeds every stage coherently;
//! and with the default global seed of 0 each stage seed reads literally.
//!
//! Missing fields and whole missing sections fall back to the defaults
//! below (the block-insertion protocol: a 500-step demonstration, 50/5/10
//! sampling, 5000 training iterations, 500 episodes x 3 seeds x 3 sources).
//! Unknown keys are rejected rather than ignored — a typo'd experiment
//! should fail loudly, not silently run the default.

use std::path::{Path, PathBuf};

use physim::{EnvKind, RecordOptions};
use replearn::TrainConfig;
use rewardfn::{DistanceKind, RefMode, RewardMode};
use sacrl::{RolloutOptions, SacHyper};
use serde::{Deserialize, Serialize};
use tvfs::{SamplingConfig, VarianceSchedule};

use crate::error::BenchError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    pub demo: DemoSection,
    pub sampling: SamplingSection,
    pub train: TrainSection,
    pub reward: RewardSection,
    pub rl: RlSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    /// `block-insertion` or `latch-door`.
    pub env: String,
    pub global_seed: u64,
    pub out_dir: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DemoSection {
    pub seed: u64,
    pub horizon: u32,
    /// False records the full horizon even after success, giving every
    /// demonstration the same length T = horizon.
    pub stop_on_success: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingSection {
    pub interval: u32,
    pub branches: u32,
    pub steps: u32,
    pub seed: u64,
    /// Cone half-angle at the trajectory endpoints, radians.
    pub theta_min: f64,
    /// Cone half-angle at mid-trajectory, radians.
    pub theta_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub iterations: u32,
    pub batch: usize,
    pub lr: f64,
    pub lambda: f64,
    pub seed: u64,
    pub checkpoint_every: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardSection {
    /// Embedding distance; only `euclidean` is currently defined.
    pub distance: String,
    /// `progress` pays p(next) each step, `delta` pays the change in p.
    pub mode: String,
    /// Goal reference = mean embedding of the demo's final `goal_frames`
    /// observations; 1 is the plain final frame.
    pub goal_frames: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RlSection {
    pub episodes: u32,
    /// Simulator steps per episode (decisions = horizon / action_repeat).
    pub horizon: u32,
    pub action_repeat: u32,
    pub gamma: f64,
    pub tau: f64,
    pub alpha: f64,
    pub lr: f64,
    pub batch: usize,
    /// Decisions taken with uniform actions before learning starts.
    pub warmup: u32,
    pub updates_per_step: u32,
    pub buffer_capacity: usize,
    /// Reward sources to benchmark: `dense`, `handcrafted`, `sparse`.
    pub sources: Vec<String>,
    /// Seed labels, one run per (source, label). The effective run seed is
    /// global_seed + label, identical across sources by construction.
    pub seeds: Vec<u64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            experiment: ExperimentSection::default(),
            demo: DemoSection::default(),
            sampling: SamplingSection::default(),
            train: TrainSection::default(),
            reward: RewardSection::default(),
            rl: RlSection::default(),
        }
    }
}

impl Default for ExperimentSection {
    fn default() -> Self {
        ExperimentSection {
            env: EnvKind::BlockInsert.name().to_owned(),
            global_seed: 0,
            out_dir: "artifacts".to_owned(),
        }
    }
}

impl Default for DemoSection {
    fn default() -> Self {
        DemoSection { seed: 0, horizon: 500, stop_on_success: false }
    }
}

impl Default for SamplingSection {
    fn default() -> Self {
        SamplingSection {
            interval: 50,
            branches: 5,
            steps: 10,
            seed: 1,
            theta_min: std::f64::consts::PI / 12.0,
            theta_max: std::f64::consts::PI / 4.0,
        }
    }
}

impl Default for TrainSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        TrainSection {
            iterations: t.iterations,
            batch: t.batch,
            lr: t.lr,
            lambda: t.lambda,
            seed: 2,
            checkpoint_every: t.checkpoint_every,
        }
    }
}

impl Default for RewardSection {
    fn default() -> Self {
        RewardSection {
            distance: "euclidean".to_owned(),
            mode: "progress".to_owned(),
            goal_frames: 1,
        }
    }
}

impl Default for RlSection {
    fn default() -> Self {
        let h = SacHyper::default();
        let r = RolloutOptions::default();
        RlSection {
            episodes: 500,
            horizon: r.horizon,
            action_repeat: r.action_repeat,
            gamma: h.gamma,
            tau: h.tau,
            alpha: h.alpha,
            lr: h.lr,
            batch: h.batch,
            warmup: h.warmup,
            updates_per_step: h.updates_per_step,
            buffer_capacity: 100_000,
            sources: vec!["dense".into(), "handcrafted".into(), "sparse".into()],
            seeds: vec![1, 2, 3],
        }
    }
}

/// Which reward drives a benchmark run. The dense variant needs the bundled
/// model at hand, so this stays a name until the run is assembled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceKind {
    Dense,
    Handcrafted,
    Sparse,
}

impl SourceKind {
    pub fn parse(s: &str) -> Result<SourceKind, BenchError> {
        match s {
            "dense" => Ok(SourceKind::Dense),
            "handcrafted" => Ok(SourceKind::Handcrafted),
            "sparse" => Ok(SourceKind::Sparse),
            other => Err(BenchError::BadConfig(format!(
                "unknown reward source '{other}' (expected dense, handcrafted, or sparse)"
            ))),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            SourceKind::Dense => "dense",
            SourceKind::Handcrafted => "handcrafted",
            SourceKind::Sparse => "sparse",
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<ExperimentConfig, BenchError> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| BenchError::BadConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<ExperimentConfig, BenchError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            BenchError::BadConfig(format!("cannot read config {}: {e}", path.display()))
        })?;
        ExperimentConfig::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("plain data serializes")
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |msg: String| Err(BenchError::BadConfig(msg));
        self.env_kind()?;
        if self.demo.horizon == 0 {
            return bad("demo horizon must be >= 1".into());
        }
        self.sampling_config().validate().map_err(|e| BenchError::BadConfig(e.to_string()))?;
        // A dummy length checks the angle constraints; the real length is
        // only known once the demonstration exists.
        VarianceSchedule::new(self.sampling.theta_min, self.sampling.theta_max, 2)
            .map_err(|e| BenchError::BadConfig(e.to_string()))?;
        if self.train.batch == 0 {
            return bad("train batch must be >= 1".into());
        }
        if !(self.train.lr.is_finite() && self.train.lr > 0.0) {
            return bad(format!("train lr must be finite and positive, got {}", self.train.lr));
        }
        if !(self.train.lambda.is_finite() && self.train.lambda >= 0.0) {
            return bad(format!("train lambda must be finite and >= 0, got {}", self.train.lambda));
        }
        self.distance()?;
        self.reward_mode()?;
        self.ref_mode()?;
        if self.rl.episodes == 0 {
            return bad("rl episodes must be >= 1".into());
        }
        self.sac_hyper().validate().map_err(|e| BenchError::BadConfig(e.to_string()))?;
        self.rollout_options().validate().map_err(|e| BenchError::BadConfig(e.to_string()))?;
        if self.rl.buffer_capacity < self.rl.batch {
            return bad(format!(
                "rl buffer capacity {} below batch size {}",
                self.rl.buffer_capacity, self.rl.batch
            ));
        }
        if self.rl.sources.is_empty() {
            return bad("rl sources list is empty".into());
        }
        let sources = self.sources()?;
        for (i, s) in sources.iter().enumerate() {
            if sources[..i].contains(s) {
                return bad(format!("duplicate reward source '{}'", s.label()));
            }
        }
        if self.rl.seeds.is_empty() {
            return bad("rl seeds list is empty".into());
        }
        for (i, s) in self.rl.seeds.iter().enumerate() {
            if self.rl.seeds[..i].contains(s) {
                return bad(format!("duplicate rl seed {s}"));
            }
        }
        Ok(())
    }

    pub fn env_kind(&self) -> Result<EnvKind, BenchError> {
        EnvKind::parse(&self.experiment.env).map_err(|_| {
            BenchError::BadConfig(format!(
                "unknown env '{}' (expected block-insertion or latch-door)",
                self.experiment.env
            ))
        })
    }

    pub fn out_dir(&self) -> PathBuf {
        PathBuf::from(&self.experiment.out_dir)
    }

    /// Effective demonstration seed (global + offset).
    pub fn demo_seed(&self) -> u64 {
        self.experiment.global_seed.wrapping_add(self.demo.seed)
    }

    /// Env seed for the held-out evaluation trajectories: the next seed
    /// after the reference demo, so it is never the one used for training.
    pub fn holdout_seed(&self) -> u64 {
        self.demo_seed().wrapping_add(1)
    }

    pub fn record_options(&self) -> RecordOptions {
        RecordOptions { horizon: self.demo.horizon, stop_on_success: self.demo.stop_on_success }
    }

    pub fn sampling_config(&self) -> SamplingConfig {
        SamplingConfig {
            interval: self.sampling.interval,
            branches: self.sampling.branches,
            steps: self.sampling.steps,
            seed: self.experiment.global_seed.wrapping_add(self.sampling.seed),
        }
    }

    pub fn schedule(&self, t_len: u32) -> Result<VarianceSchedule, BenchError> {
        VarianceSchedule::new(self.sampling.theta_min, self.sampling.theta_max, t_len)
            .map_err(|e| BenchError::BadConfig(e.to_string()))
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            iterations: self.train.iterations,
            batch: self.train.batch,
            lr: self.train.lr,
            lambda: self.train.lambda,
            seed: self.experiment.global_seed.wrapping_add(self.train.seed),
            checkpoint_every: self.train.checkpoint_every,
        }
    }

    pub fn distance(&self) -> Result<DistanceKind, BenchError> {
        match self.reward.distance.as_str() {
            "euclidean" => Ok(DistanceKind::Euclidean),
            other => Err(BenchError::BadConfig(format!(
                "unknown distance '{other}' (expected euclidean)"
            ))),
        }
    }

    pub fn reward_mode(&self) -> Result<RewardMode, BenchError> {
        match self.reward.mode.as_str() {
            "progress" => Ok(RewardMode::Progress),
            "delta" => Ok(RewardMode::Delta),
            other => Err(BenchError::BadConfig(format!(
                "unknown reward mode '{other}' (expected progress or delta)"
            ))),
        }
    }

    pub fn ref_mode(&self) -> Result<RefMode, BenchError> {
        match self.reward.goal_frames {
            0 => Err(BenchError::BadConfig("reward goal_frames must be >= 1".into())),
            1 => Ok(RefMode::Endpoints),
            n => Ok(RefMode::AveragedGoal { frames: n }),
        }
    }

    pub fn sac_hyper(&self) -> SacHyper {
        SacHyper {
            gamma: self.rl.gamma,
            tau: self.rl.tau,
            alpha: self.rl.alpha,
            lr: self.rl.lr,
            batch: self.rl.batch,
            warmup: self.rl.warmup,
            updates_per_step: self.rl.updates_per_step,
        }
    }

    pub fn rollout_options(&self) -> RolloutOptions {
        RolloutOptions { horizon: self.rl.horizon, action_repeat: self.rl.action_repeat }
    }

    pub fn sources(&self) -> Result<Vec<SourceKind>, BenchError> {
        self.rl.sources.iter().map(|s| SourceKind::parse(s)).collect()
    }

    /// Effective run seed for one seed label. Source-independent, so every
    /// reward source sees identical per-episode environment draws.
    pub fn run_seed(&self, label: u64) -> u64 {
        self.experiment.global_seed.wrapping_add(label)
    }
}

use physim::{demo_to_bytes, sense, step_env, Demonstration, Observation, DT};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::TvfsError;
use crate::sample::sample_action;
use crate::schedule::VarianceSchedule;
use crate::seeds::{select_seeds, SeedPoint};

/// Where a pair came from: the demonstration trunk or a sampled branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Demo,
    Branch,
}

impl Source {
    pub fn code(self) -> u8 {
        match self {
            Source::Demo => 0,
            Source::Branch => 1,
        }
    }

    pub fn from_code(c: u8) -> Result<Source, TvfsError> {
        match c {
            0 => Ok(Source::Demo),
            1 => Ok(Source::Branch),
            other => Err(TvfsError::BadFile(format!("unknown source tag {other}"))),
        }
    }
}

/// One temporally adjacent observation pair. `pre_clamp` stores the raw
/// sampled action vector (for demo rows, the demo action itself) so the
/// cone constraint can be re-verified from the dataset alone; `action` is
/// the clamped action that was actually stepped.
#[derive(Debug, Clone, PartialEq)]
pub struct PairRecord {
    pub source: Source,
    pub fallback: bool,
    pub seed_index: u32,
    pub branch_index: u32,
    /// Timestep of the first observation (demo clock for both sources).
    pub step_index: u32,
    pub pre_clamp: [f64; 3],
    pub action: [f64; 3],
    pub obs: Observation,
    pub obs_next: Observation,
}

/// Branch sampling shape: seeds every `interval` steps, `branches` rollouts
/// per seed, `steps` actions per rollout, all derived from `seed`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SamplingConfig {
    pub interval: u32,
    pub branches: u32,
    pub steps: u32,
    pub seed: u64,
}

impl SamplingConfig {
    pub fn validate(&self) -> Result<(), TvfsError> {
        if self.interval < 1 || self.branches < 1 || self.steps < 1 {
            return Err(TvfsError::BadConfig(format!(
                "interval/branches/steps must all be >= 1, got {}/{}/{}",
                self.interval, self.branches, self.steps
            )));
        }
        Ok(())
    }
}

/// The sampled pair tree, flattened in deterministic (trunk, then seed,
/// branch, step) order.
#[derive(Debug, Clone, PartialEq)]
pub struct PairDataset {
    pub schedule: VarianceSchedule,
    pub config: SamplingConfig,
    /// FNV-1a of the canonical demonstration bytes.
    pub demo_hash: u64,
    pub records: Vec<PairRecord>,
    /// Human-readable notes for truncated branches.
    pub incidents: Vec<String>,
}

impl PairDataset {
    /// The count law: T demo pairs plus steps·branches per seed, before
    /// truncations.
    pub fn expected_count(t_len: u32, seeds: usize, config: &SamplingConfig) -> usize {
        t_len as usize + seeds * (config.branches as usize) * (config.steps as usize)
    }
}

/// 64-bit FNV-1a: a stable, dependency-free content fingerprint for linking
/// datasets back to the demonstration they were sampled from.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Sample the branch tree around a demonstration. Each (seed, branch) rolls
/// a private ChaCha stream (stream id = seed_index·N + branch_index), so
/// branches are order-independent and the dataset is bit-reproducible.
pub fn rollout_branches(
    demo: &Demonstration,
    seeds: &[SeedPoint],
    config: &SamplingConfig,
    sched: &VarianceSchedule,
) -> Result<PairDataset, TvfsError> {
    config.validate()?;
    let t_len = demo.horizon() as u32;
    if sched.t_len() != t_len {
        return Err(TvfsError::BadConfig(format!(
            "schedule length {} does not match demo horizon {t_len}",
            sched.t_len()
        )));
    }
    if seeds.is_empty() {
        return Err(TvfsError::BadConfig("no sampling seeds".into()));
    }
    for s in seeds {
        if s.t > t_len || demo.steps[s.t as usize].state != s.state {
            return Err(TvfsError::BadConfig(format!(
                "seed at t={} does not restore this demonstration",
                s.t
            )));
        }
    }

    let mut records = Vec::with_capacity(PairDataset::expected_count(t_len, seeds.len(), config));
    let mut incidents = Vec::new();

    // Demonstration trunk: T pairs straight from the recorded observations.
    for t in 0..t_len as usize {
        let a = demo.steps[t].action.expect("non-terminal demo steps carry actions");
        records.push(PairRecord {
            source: Source::Demo,
            fallback: false,
            seed_index: 0,
            branch_index: 0,
            step_index: t as u32,
            pre_clamp: a.as_array(),
            action: a.as_array(),
            obs: demo.steps[t].obs.clone(),
            obs_next: demo.steps[t + 1].obs.clone(),
        });
    }

    // Branches: restore each seed, roll K cone-constrained steps.
    for seed in seeds {
        for branch in 0..config.branches {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(u64::from(seed.index) * u64::from(config.branches) + u64::from(branch));
            let mut state = seed.state.clone();
            let mut window = seed.window.clone();
            for j in 0..config.steps {
                let t = seed.t + j;
                // Past the end of the demo, hold the final action and the
                // end-of-schedule cone.
                let demo_action = demo.steps[t.min(t_len - 1) as usize]
                    .action
                    .expect("non-terminal demo steps carry actions");
                let theta = sched.eval_clamped(t);
                let sampled = sample_action(demo_action, theta, &mut rng);
                let obs = sense(&state, &window);
                let (next, wrench) = match step_env(&state, sampled.action, DT) {
                    Ok(out) => out,
                    Err(e) => {
                        incidents.push(format!(
                            "seed {} branch {branch} truncated at step {j}: {e}",
                            seed.index
                        ));
                        break;
                    }
                };
                window.push(wrench);
                records.push(PairRecord {
                    source: Source::Branch,
                    fallback: sampled.fallback,
                    seed_index: seed.index,
                    branch_index: branch,
                    step_index: t,
                    pre_clamp: sampled.pre_clamp,
                    action: sampled.action.as_array(),
                    obs,
                    obs_next: sense(&next, &window),
                });
                state = next;
            }
        }
    }

    Ok(PairDataset {
        schedule: *sched,
        config: *config,
        demo_hash: fnv1a(&demo_to_bytes(demo)),
        records,
        incidents,
    })
}

/// select_seeds + rollout_branches in one call.
pub fn build_pair_dataset(
    demo: &Demonstration,
    config: &SamplingConfig,
    sched: &VarianceSchedule,
) -> Result<PairDataset, TvfsError> {
    config.validate()?;
    let seeds = select_seeds(demo, config.interval);
    rollout_branches(demo, &seeds, config, sched)
}

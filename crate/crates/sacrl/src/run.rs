use std::path::Path;

use physim::EnvKind;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::buffer::ReplayBuffer;
use crate::error::SacrlError;
use crate::rollout::{rollout_episode, Controller, RolloutOptions};
use crate::sac::{mix, SacAgent, SacHyper};
use crate::source::RewardSource;

/// One (reward source, seed) experiment.
#[derive(Debug, Clone, Copy)]
pub struct RunConfig {
    pub kind: EnvKind,
    pub episodes: u32,
    pub rollout: RolloutOptions,
    /// Seeds the networks, the exploration noise, the replay sampling, and
    /// (jointly with the episode index) the per-episode environment draw.
    pub seed: u64,
    pub hyper: SacHyper,
    pub buffer_capacity: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            kind: EnvKind::BlockInsert,
            episodes: 500,
            rollout: RolloutOptions::default(),
            seed: 0,
            hyper: SacHyper::default(),
            buffer_capacity: 100_000,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), SacrlError> {
        self.hyper.validate()?;
        self.rollout.validate()?;
        if self.episodes == 0 {
            return Err(SacrlError::BadHyper("episodes must be >= 1".into()));
        }
        if self.buffer_capacity < self.hyper.batch {
            return Err(SacrlError::BadHyper(format!(
                "buffer capacity {} below batch size {}",
                self.buffer_capacity, self.hyper.batch
            )));
        }
        Ok(())
    }
}

/// Environment seed for one episode of one run. A pure function of the run
/// seed and episode index only, so every reward source sees the identical
/// sequence of initial states.
pub fn env_seed_for(run_seed: u64, episode: u32) -> u64 {
    mix(run_seed, 0x5eed_0000_0000_0000 | u64::from(episode))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeRecord {
    pub episode: u32,
    pub ret: f64,
    pub success: bool,
    pub length: u32,
}

#[derive(Debug, Clone)]
pub struct RunAbort {
    pub episode: u32,
    pub reason: String,
}

/// Everything a finished (or aborted) run leaves behind.
#[derive(Debug, Clone)]
pub struct RunLog {
    pub source: String,
    pub seed: u64,
    pub records: Vec<EpisodeRecord>,
    /// Set when a learner fault (non-finite loss or parameter) stopped the
    /// run early; the records up to that episode are kept.
    pub aborted: Option<RunAbort>,
}

/// Train one SAC agent against one reward source. Warmup episodes use
/// uniform actions; afterwards each episode is followed by
/// `length · updates_per_step` gradient updates.
pub fn train_run(source: &RewardSource<'_>, cfg: &RunConfig) -> Result<RunLog, SacrlError> {
    cfg.validate()?;
    let mut agent = SacAgent::new(cfg.seed, cfg.hyper)?;
    let mut buffer = ReplayBuffer::new(cfg.buffer_capacity, mix(cfg.seed, 101))?;
    let mut warmup_rng = ChaCha8Rng::seed_from_u64(mix(cfg.seed, 102));
    let mut log = RunLog {
        source: source.label().to_owned(),
        seed: cfg.seed,
        records: Vec::with_capacity(cfg.episodes as usize),
        aborted: None,
    };
    let mut decisions: u64 = 0;

    for episode in 0..cfg.episodes {
        let env_seed = env_seed_for(cfg.seed, episode);
        let in_warmup = decisions < u64::from(cfg.hyper.warmup);
        let ctrl = if in_warmup {
            Controller::Uniform(&mut warmup_rng)
        } else {
            Controller::Policy(&mut agent)
        };
        let (transitions, stats) = rollout_episode(cfg.kind, env_seed, ctrl, source, cfg.rollout)?;
        for t in transitions {
            buffer.push(t)?;
        }
        log.records.push(EpisodeRecord {
            episode,
            ret: stats.ret,
            success: stats.success,
            length: stats.length,
        });
        decisions += u64::from(stats.length);

        if decisions >= u64::from(cfg.hyper.warmup) && buffer.len() >= cfg.hyper.batch {
            let n_updates = u64::from(stats.length) * u64::from(cfg.hyper.updates_per_step);
            for _ in 0..n_updates {
                if let Err(e) = agent.update_from(&mut buffer) {
                    log.aborted = Some(RunAbort { episode, reason: e.to_string() });
                    return Ok(log);
                }
            }
        }
    }
    Ok(log)
}

/// Per-run training log as CSV: `episode,return,success,length,reward_source,seed`.
pub fn run_csv(log: &RunLog) -> String {
    let mut out = String::from("episode,return,success,length,reward_source,seed\n");
    for r in &log.records {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.episode,
            r.ret,
            u8::from(r.success),
            r.length,
            log.source,
            log.seed
        ));
    }
    out
}

pub fn save_run_csv(log: &RunLog, path: &Path) -> Result<(), SacrlError> {
    Ok(std::fs::write(path, run_csv(log))?)
}

use physim::{sense, step_env, success, Action, EnvKind, EnvState, WrenchWindow, DT};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::buffer::{features_of, Transition};
use crate::error::SacrlError;
use crate::sac::SacAgent;
use crate::source::RewardSource;

/// Episode shape: `horizon` simulator steps at 100 Hz, with each decision
/// held for `action_repeat` steps (the wrench window still advances every
/// simulator step).
#[derive(Debug, Clone, Copy)]
pub struct RolloutOptions {
    pub horizon: u32,
    pub action_repeat: u32,
}

impl Default for RolloutOptions {
    fn default() -> Self {
        RolloutOptions { horizon: 600, action_repeat: 5 }
    }
}

impl RolloutOptions {
    pub fn validate(&self) -> Result<(), SacrlError> {
        if self.horizon == 0 || self.action_repeat == 0 {
            return Err(SacrlError::BadHyper("horizon and action_repeat must be >= 1".into()));
        }
        Ok(())
    }
}

/// Who picks the actions for an episode: uniform noise during warmup, the
/// learned policy afterwards, or a fixed script (tests, evaluation replays).
pub enum Controller<'a> {
    Uniform(&'a mut ChaCha8Rng),
    Policy(&'a mut SacAgent),
    Script(&'a [Action]),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeStats {
    /// Sum of rewards over the episode.
    pub ret: f64,
    pub success: bool,
    /// Decisions taken (transitions recorded).
    pub length: u32,
    pub sim_steps: u32,
    /// True when a physics fault ended the episode early.
    pub truncated_by_error: bool,
}

/// Roll one episode, paying the selected reward on each post-step
/// observation. Episodes end at success (done = true), at the horizon
/// (done stays false so the critic bootstraps through the timeout), or at a
/// physics fault (done = true, flagged in the stats).
pub fn rollout_episode(
    kind: EnvKind,
    env_seed: u64,
    mut ctrl: Controller<'_>,
    source: &RewardSource<'_>,
    opts: RolloutOptions,
) -> Result<(Vec<Transition>, EpisodeStats), SacrlError> {
    opts.validate()?;
    let mut state = EnvState::init(kind, env_seed);
    let mut window = WrenchWindow::new();
    let mut prev_obs = sense(&state, &window);
    let mut transitions = Vec::new();
    let mut stats =
        EpisodeStats { ret: 0.0, success: false, length: 0, sim_steps: 0, truncated_by_error: false };

    while stats.sim_steps < opts.horizon && !success(&state) {
        let decision = stats.length as usize;
        let a = match &mut ctrl {
            Controller::Uniform(rng) => {
                [rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0)]
            }
            Controller::Policy(agent) => agent.act(&features_of(&prev_obs))?,
            Controller::Script(actions) => match actions.get(decision) {
                Some(a) => a.as_array(),
                None => break,
            },
        };
        let action = Action::from_array(a);

        let mut terminal = false;
        let mut faulted = false;
        for _ in 0..opts.action_repeat {
            match step_env(&state, action, DT) {
                Ok((next, wrench)) => {
                    state = next;
                    window.push(wrench);
                    stats.sim_steps += 1;
                    if success(&state) {
                        terminal = true;
                        break;
                    }
                    if stats.sim_steps >= opts.horizon {
                        break;
                    }
                }
                Err(_) => {
                    faulted = true;
                    break;
                }
            }
        }

        let next_obs = sense(&state, &window);
        let reward = source.reward(&prev_obs, &next_obs, &state)?;
        transitions.push(Transition {
            features: features_of(&prev_obs),
            action: a,
            reward,
            next_features: features_of(&next_obs),
            done: terminal || faulted,
        });
        stats.ret += reward;
        stats.length += 1;
        stats.success |= terminal;
        prev_obs = next_obs;
        if faulted {
            stats.truncated_by_error = true;
            break;
        }
        if terminal {
            break;
        }
    }
    Ok((transitions, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use physim::{record_demo, RecordOptions};
    use rand::SeedableRng;

    fn demo_actions(demo: &physim::Demonstration) -> Vec<Action> {
        demo.steps.iter().filter_map(|s| s.action).collect()
    }

    #[test]
    fn sparse_scripted_failure_returns_zero() {
        // Drive straight up and away from the slot: never successful.
        let script = vec![Action::new(0.0, 0.8, 0.0); 30];
        let (trans, stats) = rollout_episode(
            EnvKind::BlockInsert,
            0,
            Controller::Script(&script),
            &RewardSource::Sparse,
            RolloutOptions { horizon: 150, action_repeat: 5 },
        )
        .unwrap();
        assert_eq!(stats.ret, 0.0);
        assert!(!stats.success);
        assert_eq!(trans.len(), 30);
        assert!(trans.iter().all(|t| t.reward == 0.0 && !t.done));
    }

    #[test]
    fn sparse_success_pays_once_and_ends_the_episode() {
        let demo = record_demo(EnvKind::BlockInsert, 0, RecordOptions::default()).unwrap();
        let script = demo_actions(&demo);
        let (trans, stats) = rollout_episode(
            EnvKind::BlockInsert,
            0,
            Controller::Script(&script),
            &RewardSource::Sparse,
            RolloutOptions { horizon: 600, action_repeat: 1 },
        )
        .unwrap();
        assert!(stats.success);
        assert_eq!(stats.ret, 1.0);
        let last = trans.last().unwrap();
        assert!(last.done && last.reward == 1.0);
        assert!(trans[..trans.len() - 1].iter().all(|t| t.reward == 0.0));
        // The expert script succeeds exactly at its recorded horizon.
        assert_eq!(stats.sim_steps as usize, demo.horizon());
    }

    #[test]
    fn physics_fault_truncates_and_flags() {
        let script = vec![Action::new(f64::NAN, 0.0, 0.0)];
        let (trans, stats) = rollout_episode(
            EnvKind::BlockInsert,
            0,
            Controller::Script(&script),
            &RewardSource::Sparse,
            RolloutOptions::default(),
        )
        .unwrap();
        assert!(stats.truncated_by_error);
        assert_eq!(stats.sim_steps, 0);
        assert_eq!(trans.len(), 1);
        assert!(trans[0].done);
    }

    #[test]
    fn warmup_streams_are_identical_across_sources() {
        let run = |source: RewardSource<'_>| {
            let mut rng = ChaCha8Rng::seed_from_u64(42);
            rollout_episode(
                EnvKind::BlockInsert,
                7,
                Controller::Uniform(&mut rng),
                &source,
                RolloutOptions { horizon: 100, action_repeat: 5 },
            )
            .unwrap()
        };
        let (a, _) = run(RewardSource::Sparse);
        let (b, _) = run(RewardSource::Handcrafted);
        assert_eq!(a.len(), b.len());
        for (ta, tb) in a.iter().zip(&b) {
            assert_eq!(ta.features, tb.features);
            assert_eq!(ta.action, tb.action);
            assert_eq!(ta.next_features, tb.next_features);
            assert_eq!(ta.done, tb.done);
        }
        // Only the reward field is allowed to differ.
        assert!(a.iter().zip(&b).any(|(ta, tb)| ta.reward != tb.reward));
    }

    #[test]
    fn uniform_and_policy_actions_stay_in_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (trans, _) = rollout_episode(
            EnvKind::LatchDoor,
            1,
            Controller::Uniform(&mut rng),
            &RewardSource::Handcrafted,
            RolloutOptions { horizon: 80, action_repeat: 4 },
        )
        .unwrap();
        let mut agent = crate::sac::SacAgent::new(0, crate::sac::SacHyper::default()).unwrap();
        let (pt, _) = rollout_episode(
            EnvKind::LatchDoor,
            1,
            Controller::Policy(&mut agent),
            &RewardSource::Handcrafted,
            RolloutOptions { horizon: 80, action_repeat: 4 },
        )
        .unwrap();
        for t in trans.iter().chain(&pt) {
            assert!(t.action.iter().all(|v| (-1.0..=1.0).contains(v)), "{:?}", t.action);
        }
    }
}

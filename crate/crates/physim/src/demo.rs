use crate::env::{step_env, success, Action, EnvKind, EnvState, DT};
use crate::error::PhysimError;
use crate::expert::{ScriptedExpert, Waypoint};
use crate::sense::{sense, Observation, WrenchWindow};

/// One recorded timestep. The final entry of a demonstration has no action.
#[derive(Debug, Clone, PartialEq)]
pub struct DemoStep {
    pub state: EnvState,
    pub action: Option<Action>,
    pub obs: Observation,
}

/// An expert rollout: T+1 entries, where entry t holds the state/observation
/// before action t was taken.
#[derive(Debug, Clone, PartialEq)]
pub struct Demonstration {
    pub kind: EnvKind,
    pub seed: u64,
    pub success: bool,
    pub steps: Vec<DemoStep>,
}

impl Demonstration {
    /// Number of actions taken (entries minus the terminal one).
    pub fn horizon(&self) -> usize {
        self.steps.len() - 1
    }

    pub fn final_state(&self) -> &EnvState {
        &self.steps.last().expect("demonstrations are never empty").state
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RecordOptions {
    pub horizon: u32,
    /// Stop at the first successful state; disable to record a fixed-length
    /// trajectory (the expert holds its final waypoint after success).
    pub stop_on_success: bool,
}

impl Default for RecordOptions {
    fn default() -> Self {
        RecordOptions { horizon: 600, stop_on_success: true }
    }
}

/// Roll out the default scripted expert and record every step.
pub fn record_demo(kind: EnvKind, seed: u64, opts: RecordOptions) -> Result<Demonstration, PhysimError> {
    record_demo_with_plan(kind, seed, crate::expert::default_plan(kind), opts)
}

pub fn record_demo_with_plan(
    kind: EnvKind,
    seed: u64,
    plan: Vec<Waypoint>,
    opts: RecordOptions,
) -> Result<Demonstration, PhysimError> {
    let mut expert = ScriptedExpert::new(plan)?;
    let mut state = EnvState::init(kind, seed);
    let mut window = WrenchWindow::new();
    let mut steps = Vec::new();
    loop {
        let obs = sense(&state, &window);
        let done = (opts.stop_on_success && success(&state)) || state.step >= opts.horizon;
        if done {
            steps.push(DemoStep { state: state.clone(), action: None, obs });
            break;
        }
        let action = expert.next_action(&state);
        let (next, wrench) = step_env(&state, action, DT)?;
        steps.push(DemoStep { state, action: Some(action), obs });
        window.push(wrench);
        state = next;
    }
    let succeeded = success(&steps.last().unwrap().state);
    Ok(Demonstration { kind, seed, success: succeeded, steps })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn short_horizon_truncates_without_success() {
        let d = record_demo(
            EnvKind::BlockInsert,
            7,
            RecordOptions { horizon: 10, stop_on_success: true },
        )
        .unwrap();
        assert!(!d.success);
        assert_eq!(d.steps.len(), 11);
        assert!(d.steps.last().unwrap().action.is_none());
        assert_eq!(d.horizon(), 10);
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let opts = RecordOptions { horizon: 40, stop_on_success: true };
        let a = record_demo(EnvKind::BlockInsert, 5, opts).unwrap();
        let b = record_demo(EnvKind::BlockInsert, 5, opts).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn replaying_actions_reproduces_states() {
        let d = record_demo(
            EnvKind::LatchDoor,
            2,
            RecordOptions { horizon: 60, stop_on_success: true },
        )
        .unwrap();
        let mut state = d.steps[0].state.clone();
        for (t, step) in d.steps.iter().enumerate() {
            assert_eq!(state, step.state, "diverged at t={t}");
            if let Some(a) = step.action {
                state = step_env(&state, a, DT).unwrap().0;
            }
        }
    }
}

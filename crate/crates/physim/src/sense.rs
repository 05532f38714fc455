use crate::env::{EnvState, Wrench};
use crate::error::PhysimError;
use crate::render::{render, Grid, GRID};

/// Force/torque window length (timesteps).
pub const WINDOW: usize = 32;
/// Channels per window row: fx, fy, torque, plus three reserved zeros.
pub const WRENCH_CHANNELS: usize = 6;
/// Flattened observation length.
pub const OBS_LEN: usize = 2 * GRID * GRID + 3 + 3 + WINDOW * WRENCH_CHANNELS;

/// Rolling buffer of the most recent gripper wrenches.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WrenchWindow {
    rows: Vec<[f64; 3]>,
}

impl WrenchWindow {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, w: Wrench) {
        if self.rows.len() == WINDOW {
            self.rows.remove(0);
        }
        self.rows.push(w.as_array());
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// 32×6 matrix, newest entry last, zero-padded on the old side.
    pub fn matrix(&self) -> [[f64; WRENCH_CHANNELS]; WINDOW] {
        let mut m = [[0.0; WRENCH_CHANNELS]; WINDOW];
        let pad = WINDOW - self.rows.len();
        for (i, row) in self.rows.iter().enumerate() {
            m[pad + i][..3].copy_from_slice(row);
        }
        m
    }
}

/// Multimodal snapshot: rendered grids, gripper pose/velocity, F/T window.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub intensity: Grid,
    pub depth: Grid,
    pub pose: [f64; 3],
    pub velocity: [f64; 3],
    pub window: [[f64; WRENCH_CHANNELS]; WINDOW],
}

impl Observation {
    pub fn flatten(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(OBS_LEN);
        v.extend_from_slice(self.intensity.data());
        v.extend_from_slice(self.depth.data());
        v.extend_from_slice(&self.pose);
        v.extend_from_slice(&self.velocity);
        for row in &self.window {
            v.extend_from_slice(row);
        }
        v
    }

    pub fn from_flat(v: &[f64]) -> Result<Observation, PhysimError> {
        if v.len() != OBS_LEN {
            return Err(PhysimError::BadDemoFile(format!(
                "observation length {} != {}",
                v.len(),
                OBS_LEN
            )));
        }
        let n = GRID * GRID;
        let mut window = [[0.0; WRENCH_CHANNELS]; WINDOW];
        for (i, row) in window.iter_mut().enumerate() {
            let base = 2 * n + 6 + i * WRENCH_CHANNELS;
            row.copy_from_slice(&v[base..base + WRENCH_CHANNELS]);
        }
        Ok(Observation {
            intensity: Grid::from_cells(v[..n].to_vec()),
            depth: Grid::from_cells(v[n..2 * n].to_vec()),
            pose: [v[2 * n], v[2 * n + 1], v[2 * n + 2]],
            velocity: [v[2 * n + 3], v[2 * n + 4], v[2 * n + 5]],
            window,
        })
    }
}

/// Assemble the observation for a state given the wrench history so far.
pub fn sense(state: &EnvState, history: &WrenchWindow) -> Observation {
    let (intensity, depth) = render(state);
    let grip = state.grip_world();
    let body = state.gripped();
    let v = body.point_velocity(grip);
    Observation {
        intensity,
        depth,
        pose: [grip.x, grip.y, body.angle],
        velocity: [v.x, v.y, body.omega],
        window: history.matrix(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{step_env, Action, EnvKind, Wrench, DT};
    use crate::math::vec2;

    #[test]
    fn empty_history_gives_zero_window() {
        let s = EnvState::init(EnvKind::BlockInsert, 0);
        let obs = sense(&s, &WrenchWindow::new());
        assert!(obs.window.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn constant_wrench_fills_padded_rows() {
        let mut w = WrenchWindow::new();
        let wrench = Wrench { force: vec2(1.0, 2.0), torque: 3.0 };
        for _ in 0..40 {
            w.push(wrench);
        }
        let m = w.matrix();
        for row in &m {
            assert_eq!(row, &[1.0, 2.0, 3.0, 0.0, 0.0, 0.0]);
        }
    }

    #[test]
    fn window_keeps_last_32_in_order() {
        let mut w = WrenchWindow::new();
        for t in 0..50 {
            w.push(Wrench { force: vec2(t as f64, 0.0), torque: 0.0 });
        }
        let m = w.matrix();
        for (i, row) in m.iter().enumerate() {
            assert_eq!(row[0], (50 - WINDOW + i) as f64);
        }
    }

    #[test]
    fn window_shift_property() {
        // sense at t+1 = sense at t shifted one row up with the new wrench last.
        let mut state = EnvState::init(EnvKind::BlockInsert, 7);
        let mut w = WrenchWindow::new();
        let mut prev: Option<[[f64; 6]; WINDOW]> = None;
        for _ in 0..40 {
            let obs = sense(&state, &w);
            if let Some(p) = prev {
                for i in 1..WINDOW {
                    assert_eq!(obs.window[i - 1], p[i]);
                }
            }
            prev = Some(obs.window);
            let (next, wrench) = step_env(&state, Action::new(0.0, -1.0, 0.0), DT).unwrap();
            w.push(wrench);
            state = next;
        }
    }

    #[test]
    fn flatten_round_trip() {
        let s = EnvState::init(EnvKind::LatchDoor, 5);
        let mut w = WrenchWindow::new();
        w.push(Wrench { force: vec2(0.5, -0.25), torque: 0.125 });
        let obs = sense(&s, &w);
        let flat = obs.flatten();
        assert_eq!(flat.len(), OBS_LEN);
        assert_eq!(Observation::from_flat(&flat).unwrap(), obs);
    }
}

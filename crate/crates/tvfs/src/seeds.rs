use physim::math::vec2;
use physim::{Demonstration, EnvState, Wrench, WrenchWindow, WINDOW};

/// A restoration point on the demonstration: the exact simulator state at
/// step t plus the force/torque history the sensors saw there.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedPoint {
    pub index: u32,
    pub t: u32,
    pub state: EnvState,
    pub window: WrenchWindow,
}

/// Rebuild a wrench window from the 32×6 matrix stored in a demonstration
/// observation. The matrix is zero-padded on the old side; replaying all
/// rows (padding included) gives a window whose present and future
/// observations are identical to the original's.
pub fn window_from_obs(window: &[[f64; 6]; WINDOW]) -> WrenchWindow {
    let mut w = WrenchWindow::new();
    for row in window {
        w.push(Wrench { force: vec2(row[0], row[1]), torque: row[2] });
    }
    w
}

/// Sampling seeds at t = 0, I, 2I, … ≤ T: floor(T/I)+1 of them, each
/// carrying the stored state for exact restoration.
pub fn select_seeds(demo: &Demonstration, interval: u32) -> Vec<SeedPoint> {
    assert!(interval >= 1, "sampling interval must be at least 1");
    let t_len = demo.horizon() as u32;
    (0..=t_len / interval)
        .map(|i| {
            let t = i * interval;
            let step = &demo.steps[t as usize];
            SeedPoint {
                index: i,
                t,
                state: step.state.clone(),
                window: window_from_obs(&step.obs.window),
            }
        })
        .collect()
}

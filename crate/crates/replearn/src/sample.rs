use gradnet::Tensor;
use physim::Observation;

use crate::arch::{ArchConfig, VELOCITY_DIM};
use crate::error::ReplearnError;

/// One observation reshaped into the tensors the network consumes: grids as
/// `[1,g,g]` channel maps, the force/torque window transposed to `[channels,
/// time]` for the causal stack, and the velocity vector.
#[derive(Debug, Clone)]
pub struct Sample {
    pub(crate) intensity: Tensor,
    pub(crate) depth: Tensor,
    pub(crate) window: Tensor,
    pub(crate) velocity: Tensor,
}

impl Sample {
    /// Repack a simulator observation. The config must match the simulator's
    /// native grid and window dimensions.
    pub fn from_obs(cfg: &ArchConfig, obs: &Observation) -> Result<Self, ReplearnError> {
        if cfg.grid != physim::GRID
            || cfg.window != physim::WINDOW
            || cfg.wrench_channels != physim::WRENCH_CHANNELS
        {
            return Err(ReplearnError::BadSample(format!(
                "config wants {}x{} grids and a {}x{} window; observations are {}x{} and {}x{}",
                cfg.grid,
                cfg.grid,
                cfg.window,
                cfg.wrench_channels,
                physim::GRID,
                physim::GRID,
                physim::WINDOW,
                physim::WRENCH_CHANNELS,
            )));
        }
        let rows: Vec<f64> = obs.window.iter().flatten().copied().collect();
        Sample::from_parts(
            cfg,
            obs.intensity.data(),
            obs.depth.data(),
            &rows,
            &obs.velocity,
        )
    }

    /// Build a sample from raw buffers: grids row-major `g*g`, window as
    /// time-major rows (`window * wrench_channels`, oldest row first).
    pub fn from_parts(
        cfg: &ArchConfig,
        intensity: &[f64],
        depth: &[f64],
        window_rows: &[f64],
        velocity: &[f64],
    ) -> Result<Self, ReplearnError> {
        let g = cfg.grid;
        let (win, wc) = (cfg.window, cfg.wrench_channels);
        let want = |name: &str, got: usize, expected: usize| {
            if got == expected {
                Ok(())
            } else {
                Err(ReplearnError::BadSample(format!("{name}: expected {expected} values, got {got}")))
            }
        };
        want("intensity", intensity.len(), g * g)?;
        want("depth", depth.len(), g * g)?;
        want("window", window_rows.len(), win * wc)?;
        want("velocity", velocity.len(), VELOCITY_DIM)?;
        let all = intensity.iter().chain(depth).chain(window_rows).chain(velocity);
        if !all.clone().all(|v| v.is_finite()) {
            return Err(ReplearnError::BadSample("non-finite value in sample".into()));
        }
        // Transpose the window to channel-major so each wrench channel is one
        // causal-convolution input row.
        let mut chan_major = vec![0.0; win * wc];
        for t in 0..win {
            for c in 0..wc {
                chan_major[c * win + t] = window_rows[t * wc + c];
            }
        }
        Ok(Sample {
            intensity: Tensor::from_vec(&[1, g, g], intensity.to_vec())?,
            depth: Tensor::from_vec(&[1, g, g], depth.to_vec())?,
            window: Tensor::from_vec(&[wc, win], chan_major)?,
            velocity: Tensor::from_vec(&[VELOCITY_DIM], velocity.to_vec())?,
        })
    }

    /// Reconstruction target: intensity and depth stacked as `[2,g,g]`, the
    /// decoder's output layout.
    pub(crate) fn target(&self) -> Tensor {
        let g = self.intensity.shape()[1];
        let mut data = self.intensity.data().to_vec();
        data.extend_from_slice(self.depth.data());
        Tensor::from_vec(&[2, g, g], data).expect("stacked grids always reshape")
    }
}

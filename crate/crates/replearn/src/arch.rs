use crate::error::ReplearnError;

/// Gripper velocity is always (vx, vy, omega).
pub const VELOCITY_DIM: usize = 3;

/// Decoder transposed convolutions use kernel = stride = 2 so every layer
/// doubles the side exactly ((h-1)*2 + 2 = 2h); the layer count then follows
/// from the grid size alone.
pub const DECODER_KERNEL: usize = 2;

/// Network shapes for the two encoders and the decoder. Layer counts are
/// derived from the channel lists and the grid size, so both the default
/// desk-scale stack and deeper variants for larger inputs are constructible
/// from the same code paths.
#[derive(Debug, Clone, PartialEq)]
pub struct ArchConfig {
    /// Grid side length for intensity and depth inputs. Must be a power of
    /// two >= 4: the decoder doubles from 2x2, so the side fixes its depth.
    pub grid: usize,
    /// Width of the shared embedding space.
    pub embed: usize,
    /// Output channels of each stride-`conv_stride` layer in the per-grid
    /// conv stacks.
    pub conv_channels: Vec<usize>,
    pub conv_kernel: usize,
    pub conv_stride: usize,
    /// Per-branch feature width after the flatten + dense step.
    pub branch_out: usize,
    /// Hidden width of the fusion network that maps the concatenated branch
    /// features to the embedding.
    pub fusion_hidden: usize,
    /// Output channels of each causal convolution layer.
    pub causal_channels: Vec<usize>,
    pub causal_kernel: usize,
    /// One dilation per causal layer.
    pub causal_dilations: Vec<usize>,
    /// Timesteps in the force/torque window.
    pub window: usize,
    /// Channels per window row.
    pub wrench_channels: usize,
    /// Channels of the 2x2 feature map the decoder starts from.
    pub decoder_base: usize,
}

impl Default for ArchConfig {
    fn default() -> Self {
        ArchConfig {
            grid: physim::GRID,
            embed: 64,
            conv_channels: vec![8, 16, 32, 64],
            conv_kernel: 3,
            conv_stride: 2,
            branch_out: 32,
            fusion_hidden: 128,
            causal_channels: vec![16, 16, 32, 32],
            causal_kernel: 2,
            causal_dilations: vec![1, 2, 4, 8],
            window: physim::WINDOW,
            wrench_channels: physim::WRENCH_CHANNELS,
            decoder_base: 64,
        }
    }
}

impl ArchConfig {
    pub fn validate(&self) -> Result<(), ReplearnError> {
        let bad = |msg: String| Err(ReplearnError::BadArch(msg));
        if !self.grid.is_power_of_two() || self.grid < 4 {
            return bad(format!("grid must be a power of two >= 4, got {}", self.grid));
        }
        if self.embed == 0 || self.branch_out == 0 || self.fusion_hidden == 0 {
            return bad("embed, branch_out and fusion_hidden must be positive".into());
        }
        if self.conv_channels.is_empty() || self.conv_channels.contains(&0) {
            return bad("conv_channels must be non-empty and positive".into());
        }
        if self.conv_kernel == 0 || self.conv_stride == 0 {
            return bad("conv kernel and stride must be positive".into());
        }
        self.conv_sizes()?;
        if self.causal_channels.is_empty() || self.causal_channels.contains(&0) {
            return bad("causal_channels must be non-empty and positive".into());
        }
        if self.causal_dilations.len() != self.causal_channels.len() {
            return bad(format!(
                "{} causal dilations for {} layers",
                self.causal_dilations.len(),
                self.causal_channels.len()
            ));
        }
        if self.causal_kernel == 0 || self.causal_dilations.contains(&0) {
            return bad("causal kernel and dilations must be positive".into());
        }
        if self.window == 0 || self.wrench_channels == 0 {
            return bad("window and wrench_channels must be positive".into());
        }
        if self.decoder_channels().contains(&0) {
            return bad(format!(
                "decoder_base {} leaves a zero-channel layer over {} doublings",
                self.decoder_base,
                self.decoder_layers()
            ));
        }
        Ok(())
    }

    /// Side length after each conv layer; errors when a layer underflows its
    /// kernel.
    pub fn conv_sizes(&self) -> Result<Vec<usize>, ReplearnError> {
        let mut side = self.grid;
        let mut sizes = Vec::with_capacity(self.conv_channels.len());
        for (i, _) in self.conv_channels.iter().enumerate() {
            if side < self.conv_kernel {
                return Err(ReplearnError::BadArch(format!(
                    "conv layer {} sees a {}x{} map, smaller than kernel {}",
                    i, side, side, self.conv_kernel
                )));
            }
            side = (side - self.conv_kernel) / self.conv_stride + 1;
            sizes.push(side);
        }
        Ok(sizes)
    }

    /// Flattened feature count at the end of one conv branch.
    pub fn flat_dim(&self) -> Result<usize, ReplearnError> {
        let sizes = self.conv_sizes()?;
        let side = *sizes.last().expect("validated non-empty");
        Ok(self.conv_channels.last().copied().expect("validated non-empty") * side * side)
    }

    /// Number of doubling layers needed to grow 2x2 back to the grid.
    pub fn decoder_layers(&self) -> usize {
        (self.grid.trailing_zeros() - 1) as usize
    }

    /// Output channels of each decoder layer: halve from `decoder_base`,
    /// ending on the two reconstruction channels.
    pub fn decoder_channels(&self) -> Vec<usize> {
        let layers = self.decoder_layers();
        (0..layers)
            .map(|l| if l == layers - 1 { 2 } else { self.decoder_base >> (l + 1) })
            .collect()
    }

    /// How many trailing window rows can influence the last timestep of the
    /// causal stack: 1 + (kernel-1) * sum(dilations).
    pub fn receptive_field(&self) -> usize {
        1 + (self.causal_kernel - 1) * self.causal_dilations.iter().sum::<usize>()
    }
}

use crate::error::TvfsError;

/// Shape of the variance curve over the task. Only the quadratic bump is
/// implemented; the enum exists so dataset files can name the kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Kernel {
    #[default]
    Quadratic,
}

impl Kernel {
    pub fn code(self) -> u32 {
        match self {
            Kernel::Quadratic => 0,
        }
    }

    pub fn from_code(c: u32) -> Result<Kernel, TvfsError> {
        match c {
            0 => Ok(Kernel::Quadratic),
            other => Err(TvfsError::BadFile(format!("unknown kernel code {other}"))),
        }
    }
}

/// Time-varying cone half-angle: tight at both ends of the demonstration,
/// widest at the middle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceSchedule {
    theta_min: f64,
    theta_max: f64,
    t_len: u32,
    kernel: Kernel,
}

impl VarianceSchedule {
    pub fn new(theta_min: f64, theta_max: f64, t_len: u32) -> Result<Self, TvfsError> {
        if !(theta_min.is_finite() && theta_max.is_finite()) {
            return Err(TvfsError::BadSchedule("non-finite angle".into()));
        }
        if theta_min < 0.0 || theta_min > theta_max || theta_max > std::f64::consts::PI {
            return Err(TvfsError::BadSchedule(format!(
                "need 0 <= {theta_min} <= {theta_max} <= pi"
            )));
        }
        if t_len == 0 {
            return Err(TvfsError::BadSchedule("zero-length schedule".into()));
        }
        Ok(VarianceSchedule { theta_min, theta_max, t_len, kernel: Kernel::Quadratic })
    }

    pub fn theta_min(&self) -> f64 {
        self.theta_min
    }

    pub fn theta_max(&self) -> f64 {
        self.theta_max
    }

    pub fn t_len(&self) -> u32 {
        self.t_len
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    /// Cone half-angle at step t: the quadratic bump
    /// θ_min + (θ_max − θ_min)·4τ(1−τ) with τ = t/T, evaluated in lerp form
    /// θ_min·(1−w) + θ_max·w so the endpoints return exactly θ_min and the
    /// midpoint exactly θ_max. The weight uses the integer product t·(T−t),
    /// which makes θ(t) and θ(T−t) bit-identical.
    pub fn eval(&self, t: u32) -> Result<f64, TvfsError> {
        if t > self.t_len {
            return Err(TvfsError::OutOfRange { t, t_len: self.t_len });
        }
        let prod = u64::from(t) * u64::from(self.t_len - t);
        let w = 4.0 * prod as f64 / (u64::from(self.t_len) * u64::from(self.t_len)) as f64;
        Ok(self.theta_min * (1.0 - w) + self.theta_max * w)
    }

    /// `eval` with t clamped into range, for branch steps that run past the
    /// end of the demonstration.
    pub fn eval_clamped(&self, t: u32) -> f64 {
        self.eval(t.min(self.t_len)).expect("clamped t is in range")
    }
}

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TvfsError {
    #[error("bad variance schedule: {0}")]
    BadSchedule(String),

    #[error("schedule evaluated at t={t} outside [0, {t_len}]")]
    OutOfRange { t: u32, t_len: u32 },

    #[error("bad sampling config: {0}")]
    BadConfig(String),

    #[error("cosine similarity of a zero-norm vector is undefined")]
    ZeroNorm,

    #[error("vectors of length {0} and {1} are not comparable")]
    LengthMismatch(usize, usize),

    #[error("malformed pair dataset file: {0}")]
    BadFile(String),

    #[error("simulation failed: {0}")]
    Physics(#[from] physim::PhysimError),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

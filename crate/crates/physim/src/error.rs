use thiserror::Error;

#[derive(Debug, Error)]
pub enum PhysimError {
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("penetration {penetration} exceeds the tunneling cap (dt too large?)")]
    Tunneling { penetration: f64 },
    #[error("scripted expert needs a non-empty waypoint plan")]
    EmptyPlan,
    #[error("malformed demonstration file: {0}")]
    BadDemoFile(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

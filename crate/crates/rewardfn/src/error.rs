use physim::PhysimError;
use replearn::ReplearnError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RewardfnError {
    #[error("demonstration did not succeed; the goal state is undefined")]
    FailedDemo,

    #[error("degenerate references: d(h0, hg) = {0} is below {eps}", eps = crate::reward::DENOM_EPS)]
    DegenerateReferences(f64),

    #[error("bad reference embedding: {0}")]
    BadReference(String),

    #[error("bad bundle file: {0}")]
    BadBundle(String),

    #[error(transparent)]
    Model(#[from] ReplearnError),

    #[error(transparent)]
    Physics(#[from] PhysimError),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

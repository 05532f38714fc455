use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    /// Config file, CLI value, or cross-field validation problem. Maps to
    /// exit code 1; everything else in this enum maps to 2.
    #[error("bad config: {0}")]
    BadConfig(String),
    /// A pipeline stage failed. The stage name is part of the contract:
    /// artifacts from earlier stages are left intact on disk.
    #[error("stage '{stage}' failed: {message}")]
    Stage { stage: &'static str, message: String },
    /// An artifact on disk no longer matches the hash recorded for it in
    /// the provenance manifest at the time it was produced.
    #[error("provenance mismatch for {}: {detail}", path.display())]
    Provenance { path: PathBuf, detail: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl BenchError {
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::BadConfig(_) => 1,
            _ => 2,
        }
    }
}

/// Wraps any stage-internal error with the stage's name, preserving only
/// the message — the CLI surfaces errors as text, never by downcasting.
pub fn stage_failure<E: std::fmt::Display>(stage: &'static str) -> impl FnOnce(E) -> BenchError {
    move |e| BenchError::Stage { stage, message: e.to_string() }
}

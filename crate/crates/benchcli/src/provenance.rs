//! Provenance tracking for pipeline artifacts. Each stage records a map of
//! input hashes (upstream artifact files plus a fingerprint of the config
//! values it consumed) and the hashes of the files it produced, in a TOML
//! manifest next to the artifacts.
//!
//! On a re-run with identical inputs the stage is skipped when its outputs
//! are present and hash-identical, re-executed when they are missing, and
//! *refused* when an output exists but no longer matches the recorded hash
//! — an edited artifact must not silently seed the rest of the chain.
//! Changed inputs simply re-run the stage and overwrite the record.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::BenchError;

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn sha256_file(path: &Path) -> Result<String, BenchError> {
    Ok(sha256_hex(&std::fs::read(path)?))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    /// Input name → sha256. Names are artifact paths relative to the out
    /// directory, plus the pseudo-input `config`.
    pub inputs: BTreeMap<String, String>,
    /// Output path (relative to the out directory) → sha256.
    pub outputs: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub stages: BTreeMap<String, StageRecord>,
}

impl Manifest {
    /// Loads the manifest, treating a missing file as empty (fresh out
    /// directory). A file that exists but does not parse is an error — it
    /// means the provenance record itself was damaged.
    pub fn load(path: &Path) -> Result<Manifest, BenchError> {
        match std::fs::read_to_string(path) {
            Ok(text) => toml::from_str(&text).map_err(|e| BenchError::Provenance {
                path: path.to_owned(),
                detail: format!("manifest does not parse: {e}"),
            }),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Manifest::default()),
            Err(e) => Err(e.into()),
        }
    }

    /// Atomic save: write a sibling temp file, then rename over the target,
    /// so a crash mid-write never leaves a half-written manifest.
    pub fn save(&self, path: &Path) -> Result<(), BenchError> {
        let text = toml::to_string_pretty(self).expect("plain data serializes");
        let tmp = path.with_extension("toml.tmp");
        std::fs::write(&tmp, text)?;
        std::fs::rename(&tmp, path)?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StageStatus {
    /// Inputs and outputs all matched the record; nothing executed.
    Skipped,
    Ran,
}

/// Key for an artifact path in manifest maps: relative to the out
/// directory when possible, full path otherwise.
pub fn artifact_key(root: &Path, path: &Path) -> String {
    path.strip_prefix(root).unwrap_or(path).display().to_string()
}

/// Runs one stage under provenance control; see the module docs for the
/// skip / re-run / refuse rules. `run` only executes when needed, and the
/// manifest is saved after every executed stage so a later crash resumes
/// from here.
pub fn ensure_stage(
    manifest: &mut Manifest,
    manifest_path: &Path,
    root: &Path,
    stage: &'static str,
    inputs: BTreeMap<String, String>,
    outputs: &[PathBuf],
    run: impl FnOnce() -> Result<(), BenchError>,
) -> Result<StageStatus, BenchError> {
    if let Some(record) = manifest.stages.get(stage) {
        if record.inputs == inputs {
            let mut reusable = true;
            for path in outputs {
                let key = artifact_key(root, path);
                match (path.exists(), record.outputs.get(&key)) {
                    (true, Some(recorded)) => {
                        let now = sha256_file(path)?;
                        if &now != recorded {
                            return Err(BenchError::Provenance {
                                path: path.clone(),
                                detail: format!(
                                    "hash {now} differs from the recorded {recorded} although \
                                     the stage inputs are unchanged; the file was edited outside \
                                     the pipeline"
                                ),
                            });
                        }
                    }
                    // Missing file, or an output this record never produced:
                    // not tampering, just an incomplete stage — re-run it.
                    (true, None) | (false, _) => reusable = false,
                }
            }
            if reusable {
                return Ok(StageStatus::Skipped);
            }
        }
    }

    run()?;
    let mut record = StageRecord { inputs, outputs: BTreeMap::new() };
    for path in outputs {
        record.outputs.insert(artifact_key(root, path), sha256_file(path)?);
    }
    manifest.stages.insert(stage.to_owned(), record);
    manifest.save(manifest_path)?;
    Ok(StageStatus::Ran)
}

//! Pair dataset files ("PRPD"). Little-endian throughout; f64 as raw bits,
//! so round trips are bit-exact.
//!
//! Layout:
//!   magic "PRPD" | version u32 | demo_hash u64
//!   | theta_min f64 | theta_max f64 | t_len u32 | kernel u32
//!   | interval u32 | branches u32 | steps u32 | seed u64
//!   | record_count u64 | incident_count u32
//!   | incidents: (len u32, utf8 bytes) each
//!   | records: tag u8 | fallback u8 | seed u32 | branch u32 | step u32
//!     | pre_clamp 3×f64 | action 3×f64 | obs 2246×f64 | obs_next 2246×f64

use std::path::Path;

use physim::{Observation, OBS_LEN};

use crate::dataset::{PairDataset, PairRecord, SamplingConfig, Source};
use crate::error::TvfsError;
use crate::schedule::{Kernel, VarianceSchedule};

const MAGIC: &[u8; 4] = b"PRPD";
const VERSION: u32 = 1;

pub fn dataset_to_bytes(ds: &PairDataset) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&ds.demo_hash.to_le_bytes());
    out.extend_from_slice(&ds.schedule.theta_min().to_le_bytes());
    out.extend_from_slice(&ds.schedule.theta_max().to_le_bytes());
    out.extend_from_slice(&ds.schedule.t_len().to_le_bytes());
    out.extend_from_slice(&ds.schedule.kernel().code().to_le_bytes());
    out.extend_from_slice(&ds.config.interval.to_le_bytes());
    out.extend_from_slice(&ds.config.branches.to_le_bytes());
    out.extend_from_slice(&ds.config.steps.to_le_bytes());
    out.extend_from_slice(&ds.config.seed.to_le_bytes());
    out.extend_from_slice(&(ds.records.len() as u64).to_le_bytes());
    out.extend_from_slice(&(ds.incidents.len() as u32).to_le_bytes());
    for inc in &ds.incidents {
        out.extend_from_slice(&(inc.len() as u32).to_le_bytes());
        out.extend_from_slice(inc.as_bytes());
    }
    for r in &ds.records {
        out.push(r.source.code());
        out.push(u8::from(r.fallback));
        out.extend_from_slice(&r.seed_index.to_le_bytes());
        out.extend_from_slice(&r.branch_index.to_le_bytes());
        out.extend_from_slice(&r.step_index.to_le_bytes());
        for v in r.pre_clamp.iter().chain(&r.action) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for v in r.obs.flatten().iter().chain(&r.obs_next.flatten()) {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], TvfsError> {
        let end = self.at.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or_else(|| {
            TvfsError::BadFile(format!("truncated at byte {val}", val = self.at))
        })?;
        let s = &self.buf[self.at..end];
        self.at = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, TvfsError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, TvfsError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, TvfsError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, TvfsError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>, TvfsError> {
        self.take(n * 8).map(|bytes| {
            bytes
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect()
        })
    }
}

pub fn dataset_from_bytes(buf: &[u8]) -> Result<PairDataset, TvfsError> {
    let mut r = Reader { buf, at: 0 };
    if r.take(4)? != MAGIC {
        return Err(TvfsError::BadFile("bad magic".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(TvfsError::BadFile(format!("unsupported version {version}")));
    }
    let demo_hash = r.u64()?;
    let theta_min = r.f64()?;
    let theta_max = r.f64()?;
    let t_len = r.u32()?;
    let kernel = Kernel::from_code(r.u32()?)?;
    debug_assert_eq!(kernel, Kernel::Quadratic);
    let schedule = VarianceSchedule::new(theta_min, theta_max, t_len)
        .map_err(|e| TvfsError::BadFile(format!("bad stored schedule: {e}")))?;
    let config = SamplingConfig {
        interval: r.u32()?,
        branches: r.u32()?,
        steps: r.u32()?,
        seed: r.u64()?,
    };
    config.validate().map_err(|e| TvfsError::BadFile(format!("bad stored config: {e}")))?;
    let record_count = r.u64()? as usize;
    let incident_count = r.u32()? as usize;
    let mut incidents = Vec::with_capacity(incident_count);
    for _ in 0..incident_count {
        let len = r.u32()? as usize;
        let s = std::str::from_utf8(r.take(len)?)
            .map_err(|_| TvfsError::BadFile("incident note is not utf-8".into()))?;
        incidents.push(s.to_owned());
    }
    let mut records = Vec::with_capacity(record_count);
    for _ in 0..record_count {
        let source = Source::from_code(r.u8()?)?;
        let fallback = match r.u8()? {
            0 => false,
            1 => true,
            other => return Err(TvfsError::BadFile(format!("bad fallback byte {other}"))),
        };
        let seed_index = r.u32()?;
        let branch_index = r.u32()?;
        let step_index = r.u32()?;
        let mut pre_clamp = [0.0; 3];
        for v in &mut pre_clamp {
            *v = r.f64()?;
        }
        let mut action = [0.0; 3];
        for v in &mut action {
            *v = r.f64()?;
        }
        let obs = Observation::from_flat(&r.f64s(OBS_LEN)?)
            .map_err(|e| TvfsError::BadFile(e.to_string()))?;
        let obs_next = Observation::from_flat(&r.f64s(OBS_LEN)?)
            .map_err(|e| TvfsError::BadFile(e.to_string()))?;
        records.push(PairRecord {
            source,
            fallback,
            seed_index,
            branch_index,
            step_index,
            pre_clamp,
            action,
            obs,
            obs_next,
        });
    }
    if r.at != buf.len() {
        return Err(TvfsError::BadFile(format!(
            "{} trailing bytes after the last record",
            buf.len() - r.at
        )));
    }
    Ok(PairDataset { schedule, config, demo_hash, records, incidents })
}

pub fn save_dataset(ds: &PairDataset, path: &Path) -> Result<(), TvfsError> {
    Ok(std::fs::write(path, dataset_to_bytes(ds))?)
}

pub fn load_dataset(path: &Path) -> Result<PairDataset, TvfsError> {
    dataset_from_bytes(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::build_pair_dataset;
    use physim::{record_demo, EnvKind, RecordOptions};

    fn sample_dataset() -> PairDataset {
        let demo = record_demo(
            EnvKind::BlockInsert,
            7,
            RecordOptions { horizon: 20, stop_on_success: false },
        )
        .unwrap();
        let config = SamplingConfig { interval: 10, branches: 2, steps: 3, seed: 11 };
        let sched = VarianceSchedule::new(0.2, 0.7, 20).unwrap();
        build_pair_dataset(&demo, &config, &sched).unwrap()
    }

    #[test]
    fn byte_round_trip_is_bit_exact() {
        let ds = sample_dataset();
        let bytes = dataset_to_bytes(&ds);
        let back = dataset_from_bytes(&bytes).unwrap();
        assert_eq!(back, ds);
        assert_eq!(dataset_to_bytes(&back), bytes);
    }

    #[test]
    fn file_round_trip() {
        let ds = sample_dataset();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pairs.prpd");
        save_dataset(&ds, &path).unwrap();
        assert_eq!(load_dataset(&path).unwrap(), ds);
    }

    #[test]
    fn corrupt_files_are_rejected() {
        let ds = sample_dataset();
        let mut bytes = dataset_to_bytes(&ds);

        let mut bad_magic = bytes.clone();
        bad_magic[0] = b'X';
        assert!(dataset_from_bytes(&bad_magic).is_err());

        let truncated = &bytes[..bytes.len() - 5];
        assert!(dataset_from_bytes(truncated).is_err());

        bytes.push(0);
        assert!(matches!(dataset_from_bytes(&bytes), Err(TvfsError::BadFile(m)) if m.contains("trailing")));
    }
}

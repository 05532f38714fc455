//! Demonstration file format ("PRLD"): a 16-byte header — magic, version,
//! env kind code, T — followed by seed, success flag, body count, then T+1
//! fixed-size records of (t, state vector, action flag + action, flattened
//! observation). All integers and doubles little-endian.

use std::io::{Read, Write};
use std::path::Path;

use crate::demo::{DemoStep, Demonstration};
use crate::env::{Action, EnvKind, EnvState};
use crate::error::PhysimError;
use crate::sense::{Observation, OBS_LEN};

const MAGIC: &[u8; 4] = b"PRLD";
const VERSION: u32 = 1;

pub fn demo_to_bytes(demo: &Demonstration) -> Vec<u8> {
    let n_bodies = demo.steps[0].state.bodies.len();
    let rec = 4 + n_bodies * 6 * 8 + 1 + 24 + OBS_LEN * 8;
    let mut buf = Vec::with_capacity(16 + 13 + demo.steps.len() * rec);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&demo.kind.code().to_le_bytes());
    buf.extend_from_slice(&(demo.horizon() as u32).to_le_bytes());
    buf.extend_from_slice(&demo.seed.to_le_bytes());
    buf.push(demo.success as u8);
    buf.extend_from_slice(&(n_bodies as u32).to_le_bytes());
    for step in &demo.steps {
        buf.extend_from_slice(&step.state.step.to_le_bytes());
        for v in step.state.state_vec() {
            buf.extend_from_slice(&v.to_bits().to_le_bytes());
        }
        buf.push(step.action.is_some() as u8);
        let a = step.action.unwrap_or_default().as_array();
        for v in a {
            buf.extend_from_slice(&v.to_bits().to_le_bytes());
        }
        for v in step.obs.flatten() {
            buf.extend_from_slice(&v.to_bits().to_le_bytes());
        }
    }
    buf
}

pub fn demo_from_bytes(bytes: &[u8]) -> Result<Demonstration, PhysimError> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(PhysimError::BadDemoFile("bad magic".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(PhysimError::BadDemoFile(format!("unsupported version {version}")));
    }
    let kind = EnvKind::from_code(r.u32()?)?;
    let t_len = r.u32()? as usize;
    let seed = r.u64()?;
    let success = match r.u8()? {
        0 => false,
        1 => true,
        other => return Err(PhysimError::BadDemoFile(format!("bad success byte {other}"))),
    };
    let n_bodies = r.u32()? as usize;
    let mut steps = Vec::with_capacity(t_len + 1);
    for _ in 0..=t_len {
        let step_no = r.u32()?;
        let mut sv = Vec::with_capacity(n_bodies * 6);
        for _ in 0..n_bodies * 6 {
            sv.push(r.f64()?);
        }
        let state = EnvState::from_state_vec(kind, step_no, &sv)?;
        let has_action = r.u8()? == 1;
        let mut a = [0.0; 3];
        for v in &mut a {
            *v = r.f64()?;
        }
        let action = has_action.then(|| Action::from_array(a));
        let mut flat = Vec::with_capacity(OBS_LEN);
        for _ in 0..OBS_LEN {
            flat.push(r.f64()?);
        }
        let obs = Observation::from_flat(&flat)?;
        steps.push(DemoStep { state, action, obs });
    }
    if r.pos != bytes.len() {
        return Err(PhysimError::BadDemoFile(format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    Ok(Demonstration { kind, seed, success, steps })
}

pub fn save_demo(demo: &Demonstration, path: &Path) -> Result<(), PhysimError> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(&demo_to_bytes(demo))?;
    Ok(())
}

pub fn load_demo(path: &Path) -> Result<Demonstration, PhysimError> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    demo_from_bytes(&bytes)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], PhysimError> {
        if self.pos + n > self.bytes.len() {
            return Err(PhysimError::BadDemoFile("truncated file".into()));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, PhysimError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, PhysimError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, PhysimError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, PhysimError> {
        Ok(f64::from_bits(self.u64()?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demo::{record_demo, RecordOptions};

    #[test]
    fn byte_round_trip_is_exact() {
        let d = record_demo(
            EnvKind::BlockInsert,
            3,
            RecordOptions { horizon: 25, stop_on_success: false },
        )
        .unwrap();
        let bytes = demo_to_bytes(&d);
        let back = demo_from_bytes(&bytes).unwrap();
        assert_eq!(d, back);
        assert_eq!(bytes, demo_to_bytes(&back));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("demo.prld");
        let d = record_demo(
            EnvKind::LatchDoor,
            1,
            RecordOptions { horizon: 10, stop_on_success: false },
        )
        .unwrap();
        save_demo(&d, &path).unwrap();
        assert_eq!(load_demo(&path).unwrap(), d);
    }

    #[test]
    fn corrupt_rejected() {
        let d = record_demo(
            EnvKind::BlockInsert,
            3,
            RecordOptions { horizon: 5, stop_on_success: false },
        )
        .unwrap();
        let bytes = demo_to_bytes(&d);
        assert!(demo_from_bytes(&bytes[..20]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'Q';
        assert!(demo_from_bytes(&bad).is_err());
        let mut long = bytes;
        long.push(7);
        assert!(demo_from_bytes(&long).is_err());
    }
}

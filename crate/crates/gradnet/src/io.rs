use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::GradnetError;
use crate::tensor::Tensor;

const MAGIC: &[u8; 4] = b"PRCK";
const VERSION: u32 = 1;

/// Ordered, named collection of parameter tensors. Insertion order defines
/// the parameter ids used when binding leaves with [`crate::Graph::param`].
#[derive(Debug, Clone, Default)]
pub struct ParamSet {
    names: Vec<String>,
    tensors: Vec<Tensor>,
    index: HashMap<String, usize>,
}

impl ParamSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Register a tensor under a unique name, returning its parameter id.
    pub fn insert(&mut self, name: &str, t: Tensor) -> Result<usize, GradnetError> {
        if self.index.contains_key(name) {
            return Err(GradnetError::DuplicateParam(name.to_string()));
        }
        let id = self.tensors.len();
        self.index.insert(name.to_string(), id);
        self.names.push(name.to_string());
        self.tensors.push(t);
        Ok(id)
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn by_id(&self, id: usize) -> &Tensor {
        &self.tensors[id]
    }

    pub fn by_id_mut(&mut self, id: usize) -> &mut Tensor {
        &mut self.tensors[id]
    }

    pub fn id_of(&self, name: &str) -> Result<usize, GradnetError> {
        self.index.get(name).copied().ok_or_else(|| GradnetError::UnknownParam(name.to_string()))
    }

    pub fn get(&self, name: &str) -> Result<&Tensor, GradnetError> {
        Ok(&self.tensors[self.id_of(name)?])
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.names.iter().map(|s| s.as_str())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.names.iter().map(|s| s.as_str()).zip(self.tensors.iter())
    }

    pub fn total_scalars(&self) -> usize {
        self.tensors.iter().map(|t| t.len()).sum()
    }

    /// Serialize as a PRCK archive: magic, version, tensor count, then each
    /// tensor as (name length, name bytes, rank, extents, f64 data), all
    /// integers and doubles little-endian.
    pub fn to_bytes(&self) -> Vec<u8> {
        let payload: usize = self
            .iter()
            .map(|(n, t)| 4 + n.len() + 4 + 8 * t.rank() + 8 * t.len())
            .sum();
        let mut buf = Vec::with_capacity(12 + payload);
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&VERSION.to_le_bytes());
        buf.extend_from_slice(&(self.tensors.len() as u32).to_le_bytes());
        for (name, t) in self.iter() {
            buf.extend_from_slice(&(name.len() as u32).to_le_bytes());
            buf.extend_from_slice(name.as_bytes());
            buf.extend_from_slice(&(t.rank() as u32).to_le_bytes());
            for &e in t.shape() {
                buf.extend_from_slice(&(e as u64).to_le_bytes());
            }
            for &v in t.data() {
                buf.extend_from_slice(&v.to_bits().to_le_bytes());
            }
        }
        buf
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, GradnetError> {
        let mut r = Cursor { bytes, pos: 0 };
        let magic = r.take(4)?;
        if magic != MAGIC {
            return Err(GradnetError::BadCheckpoint(format!("bad magic {:02x?}", magic)));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(GradnetError::BadCheckpoint(format!("unsupported version {}", version)));
        }
        let count = r.u32()? as usize;
        let mut set = ParamSet::new();
        for _ in 0..count {
            let name_len = r.u32()? as usize;
            let name = std::str::from_utf8(r.take(name_len)?)
                .map_err(|e| GradnetError::BadCheckpoint(format!("name not utf-8: {e}")))?
                .to_string();
            let rank = r.u32()? as usize;
            let mut shape = Vec::with_capacity(rank);
            for _ in 0..rank {
                shape.push(r.u64()? as usize);
            }
            let n: usize = shape.iter().product();
            let mut data = Vec::with_capacity(n);
            for _ in 0..n {
                data.push(f64::from_bits(r.u64()?));
            }
            set.insert(&name, Tensor::from_vec(&shape, data)?)?;
        }
        if r.pos != bytes.len() {
            return Err(GradnetError::BadCheckpoint(format!(
                "{} trailing bytes",
                bytes.len() - r.pos
            )));
        }
        Ok(set)
    }

    pub fn save(&self, path: &Path) -> Result<(), GradnetError> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, GradnetError> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], GradnetError> {
        if self.pos + n > self.bytes.len() {
            return Err(GradnetError::BadCheckpoint("truncated archive".to_string()));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, GradnetError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, GradnetError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicate_name_rejected() {
        let mut set = ParamSet::new();
        set.insert("w", Tensor::scalar(1.0)).unwrap();
        assert!(matches!(
            set.insert("w", Tensor::scalar(2.0)),
            Err(GradnetError::DuplicateParam(_))
        ));
    }

    #[test]
    fn byte_round_trip_preserves_bits() {
        let mut set = ParamSet::new();
        // Include awkward values: negative zero, subnormal, huge.
        set.insert("a", Tensor::from_vec(&[2, 2], vec![-0.0, 1.5e-310, 1e300, -7.25]).unwrap())
            .unwrap();
        set.insert("b", Tensor::from_vec(&[3], vec![0.1, 0.2, 0.3]).unwrap()).unwrap();
        let bytes = set.to_bytes();
        let back = ParamSet::from_bytes(&bytes).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back.names().collect::<Vec<_>>(), ["a", "b"]);
        for (orig, loaded) in set.iter().zip(back.iter()) {
            assert_eq!(orig.0, loaded.0);
            assert_eq!(orig.1.shape(), loaded.1.shape());
            for (x, y) in orig.1.data().iter().zip(loaded.1.data()) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
        // And serialization is itself deterministic.
        assert_eq!(bytes, back.to_bytes());
    }

    #[test]
    fn corrupt_archives_rejected() {
        let mut set = ParamSet::new();
        set.insert("w", Tensor::scalar(1.0)).unwrap();
        let bytes = set.to_bytes();

        let mut bad_magic = bytes.clone();
        bad_magic[0] = b'X';
        assert!(ParamSet::from_bytes(&bad_magic).is_err());

        let truncated = &bytes[..bytes.len() - 1];
        assert!(ParamSet::from_bytes(truncated).is_err());

        let mut trailing = bytes.clone();
        trailing.push(0);
        assert!(ParamSet::from_bytes(&trailing).is_err());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.prck");
        let mut set = ParamSet::new();
        set.insert("layer.w", Tensor::from_vec(&[2], vec![1.0, -2.0]).unwrap()).unwrap();
        set.save(&path).unwrap();
        let back = ParamSet::load(&path).unwrap();
        assert_eq!(back.get("layer.w").unwrap().data(), &[1.0, -2.0]);
    }
}

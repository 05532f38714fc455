//! Reward bundle files ("PRRB"): everything needed to evaluate the learned
//! reward — encoder checkpoint, architecture, reference embeddings, distance
//! and payout modes — in one container. Little-endian; f64 as raw bits.
//!
//! Layout:
//!   magic "PRRB" | version u32 | provenance u64
//!   | distance u8 | mode u8
//!   | grid u32 | embed u32 | conv_kernel u32 | conv_stride u32
//!   | branch_out u32 | fusion_hidden u32 | causal_kernel u32 | window u32
//!   | wrench_channels u32 | decoder_base u32
//!   | conv_channels (count u32, each u32)
//!   | causal_channels (count u32, each u32)
//!   | causal_dilations (count u32, each u32)
//!   | h0 embed×f64 | hg embed×f64
//!   | checkpoint (len u64, bytes)
//!   | integrity u64 — fnv1a over every preceding byte

use std::path::Path;

use replearn::{ArchConfig, ReprModel};
use tvfs::fnv1a;

use crate::distance::DistanceKind;
use crate::error::RewardfnError;
use crate::reward::{RewardModel, RewardMode};

const MAGIC: &[u8; 4] = b"PRRB";
const VERSION: u32 = 1;

fn push_u32(out: &mut Vec<u8>, v: usize) {
    out.extend_from_slice(&(v as u32).to_le_bytes());
}

fn push_list(out: &mut Vec<u8>, vs: &[usize]) {
    push_u32(out, vs.len());
    for &v in vs {
        push_u32(out, v);
    }
}

/// Serialize a reward model together with a caller-supplied provenance tag
/// (conventionally the hash of the demonstration the references came from).
pub fn bundle_to_bytes(rm: &RewardModel, provenance: u64) -> Vec<u8> {
    let cfg = rm.model().config();
    let (h0, hg) = rm.references();
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&provenance.to_le_bytes());
    out.push(rm.distance().code());
    out.push(rm.mode().code());
    push_u32(&mut out, cfg.grid);
    push_u32(&mut out, cfg.embed);
    push_u32(&mut out, cfg.conv_kernel);
    push_u32(&mut out, cfg.conv_stride);
    push_u32(&mut out, cfg.branch_out);
    push_u32(&mut out, cfg.fusion_hidden);
    push_u32(&mut out, cfg.causal_kernel);
    push_u32(&mut out, cfg.window);
    push_u32(&mut out, cfg.wrench_channels);
    push_u32(&mut out, cfg.decoder_base);
    push_list(&mut out, &cfg.conv_channels);
    push_list(&mut out, &cfg.causal_channels);
    push_list(&mut out, &cfg.causal_dilations);
    for v in h0.iter().chain(hg) {
        out.extend_from_slice(&v.to_le_bytes());
    }
    let checkpoint = rm.model().to_bytes();
    out.extend_from_slice(&(checkpoint.len() as u64).to_le_bytes());
    out.extend_from_slice(&checkpoint);
    let digest = fnv1a(&out);
    out.extend_from_slice(&digest.to_le_bytes());
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], RewardfnError> {
        let end = self.at.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or_else(|| {
            RewardfnError::BadBundle(format!("truncated at byte {val}", val = self.at))
        })?;
        let s = &self.buf[self.at..end];
        self.at = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, RewardfnError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<usize, RewardfnError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }

    fn u64(&mut self) -> Result<u64, RewardfnError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>, RewardfnError> {
        self.take(n * 8).map(|bytes| {
            bytes
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect()
        })
    }

    fn list(&mut self) -> Result<Vec<usize>, RewardfnError> {
        let n = self.u32()?;
        if n > 64 {
            return Err(RewardfnError::BadBundle(format!("implausible layer count {n}")));
        }
        (0..n).map(|_| self.u32()).collect()
    }
}

/// Deserialize and fully revalidate a bundle: integrity digest, architecture,
/// checkpoint inventory, and the reference-separation guard all rerun here.
/// Returns the model plus the stored provenance tag.
pub fn bundle_from_bytes(buf: &[u8]) -> Result<(RewardModel, u64), RewardfnError> {
    if buf.len() < 8 {
        return Err(RewardfnError::BadBundle("shorter than its own digest".into()));
    }
    let (payload, digest_bytes) = buf.split_at(buf.len() - 8);
    let stored = u64::from_le_bytes(digest_bytes.try_into().unwrap());
    let actual = fnv1a(payload);
    if stored != actual {
        return Err(RewardfnError::BadBundle(format!(
            "integrity digest mismatch: stored {stored:#018x}, computed {actual:#018x}"
        )));
    }
    let mut r = Reader { buf: payload, at: 0 };
    if r.take(4)? != MAGIC {
        return Err(RewardfnError::BadBundle("bad magic".into()));
    }
    let version = r.u32()?;
    if version != VERSION as usize {
        return Err(RewardfnError::BadBundle(format!("unsupported version {version}")));
    }
    let provenance = r.u64()?;
    let kind_code = r.u8()?;
    let kind = DistanceKind::from_code(kind_code)
        .ok_or_else(|| RewardfnError::BadBundle(format!("bad distance byte {kind_code}")))?;
    let mode_code = r.u8()?;
    let mode = RewardMode::from_code(mode_code)
        .ok_or_else(|| RewardfnError::BadBundle(format!("bad reward mode byte {mode_code}")))?;
    let cfg = ArchConfig {
        grid: r.u32()?,
        embed: r.u32()?,
        conv_kernel: r.u32()?,
        conv_stride: r.u32()?,
        branch_out: r.u32()?,
        fusion_hidden: r.u32()?,
        causal_kernel: r.u32()?,
        window: r.u32()?,
        wrench_channels: r.u32()?,
        decoder_base: r.u32()?,
        conv_channels: r.list()?,
        causal_channels: r.list()?,
        causal_dilations: r.list()?,
    };
    let embed = cfg.embed;
    let h0 = r.f64s(embed)?;
    let hg = r.f64s(embed)?;
    let checkpoint_len = r.u64()? as usize;
    let checkpoint = r.take(checkpoint_len)?;
    if r.at != payload.len() {
        return Err(RewardfnError::BadBundle(format!(
            "{} trailing bytes after the checkpoint",
            payload.len() - r.at
        )));
    }
    let model = ReprModel::from_bytes(cfg, checkpoint)?;
    let rm = RewardModel::from_embeddings(model, h0, hg, kind, mode)?;
    Ok((rm, provenance))
}

pub fn save_bundle(rm: &RewardModel, provenance: u64, path: &Path) -> Result<(), RewardfnError> {
    Ok(std::fs::write(path, bundle_to_bytes(rm, provenance))?)
}

pub fn load_bundle(path: &Path) -> Result<(RewardModel, u64), RewardfnError> {
    bundle_from_bytes(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_reward() -> RewardModel {
        let cfg = ArchConfig {
            grid: 8,
            embed: 4,
            conv_channels: vec![2, 2],
            branch_out: 4,
            fusion_hidden: 8,
            causal_channels: vec![2, 2],
            causal_dilations: vec![1, 2],
            decoder_base: 4,
            ..ArchConfig::default()
        };
        let model = ReprModel::new(cfg, 9).unwrap();
        RewardModel::from_embeddings(
            model,
            vec![1.0, -2.0, 0.5, 3.25],
            vec![0.125, 4.0, -1.5, 0.0],
            DistanceKind::Euclidean,
            RewardMode::Progress,
        )
        .unwrap()
    }

    #[test]
    fn byte_round_trip_is_bit_exact() {
        let rm = sample_reward();
        let bytes = bundle_to_bytes(&rm, 0xfeed_beef);
        let (back, provenance) = bundle_from_bytes(&bytes).unwrap();
        assert_eq!(provenance, 0xfeed_beef);
        assert_eq!(back.references(), rm.references());
        assert_eq!(back.denominator().to_bits(), rm.denominator().to_bits());
        assert_eq!(back.model().to_bytes(), rm.model().to_bytes());
        assert_eq!(bundle_to_bytes(&back, provenance), bytes);
    }

    #[test]
    fn file_round_trip_preserves_progress_bitwise() {
        let rm = sample_reward();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("reward.prrb");
        save_bundle(&rm, 7, &path).unwrap();
        let (back, _) = load_bundle(&path).unwrap();
        let h = vec![0.25, -0.5, 0.75, -1.0];
        assert_eq!(
            back.progress_of_embedding(&h).unwrap().to_bits(),
            rm.progress_of_embedding(&h).unwrap().to_bits()
        );
    }

    #[test]
    fn corrupt_bundles_are_rejected() {
        let rm = sample_reward();
        let bytes = bundle_to_bytes(&rm, 1);

        let mut bad_magic = bytes.clone();
        bad_magic[0] = b'X';
        assert!(bundle_from_bytes(&bad_magic).is_err());

        assert!(bundle_from_bytes(&bytes[..bytes.len() - 5]).is_err());

        // A flipped payload byte must fail the integrity digest, not parse.
        let mut flipped = bytes.clone();
        flipped[60] ^= 0x40;
        assert!(matches!(
            bundle_from_bytes(&flipped),
            Err(RewardfnError::BadBundle(m)) if m.contains("integrity")
        ));

        let mut trailing = bytes;
        trailing.push(0);
        assert!(bundle_from_bytes(&trailing).is_err());
    }
}

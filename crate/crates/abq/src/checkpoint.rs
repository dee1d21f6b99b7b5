//! Network checkpoints.
//!
//! Layout:
//!
//! ```text
//! {"format":"abq-checkpoint","version":1,...}\n   header, one JSON line
//! f64 little-endian × num_params                    payload
//! u64 little-endian                                 payload length in bytes
//! u32 little-endian                                 CRC-32 of header line + payload
//! ```
//!
//! Parameters are stored in [`ParamSet`] order: trunk, value head, then the
//! branch heads, each layer as weights then bias.

use std::path::Path;

use abq_core::nn::ParamSet;
use abq_core::qnet::{BaselineMode, BranchingNet, NetWidths};
use serde::{Deserialize, Serialize};

use crate::config::EnvConfig;
use crate::error::{HarnessError, IoContext, Result};

pub const FORMAT: &str = "abq-checkpoint";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WidthsMeta {
    pub trunk_hidden: usize,
    pub features: usize,
    pub head_hidden: usize,
}

impl From<NetWidths> for WidthsMeta {
    fn from(w: NetWidths) -> Self {
        WidthsMeta {
            trunk_hidden: w.trunk_hidden,
            features: w.features,
            head_hidden: w.head_hidden,
        }
    }
}

impl From<WidthsMeta> for NetWidths {
    fn from(w: WidthsMeta) -> Self {
        NetWidths {
            trunk_hidden: w.trunk_hidden,
            features: w.features,
            head_hidden: w.head_hidden,
        }
    }
}

/// Everything needed to rebuild the network and the environment it was
/// trained on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub format: String,
    pub version: u32,
    pub state_dim: usize,
    pub branches: usize,
    pub sub_actions: usize,
    pub widths: WidthsMeta,
    pub mode: String,
    pub seed: u64,
    pub episode: usize,
    pub gamma: f64,
    pub env: EnvConfig,
}

impl CheckpointMeta {
    pub fn new(net: &BranchingNet, mode: BaselineMode, seed: u64, episode: usize, gamma: f64, env: EnvConfig) -> Self {
        CheckpointMeta {
            format: FORMAT.into(),
            version: VERSION,
            state_dim: net.state_dim(),
            branches: net.branches(),
            sub_actions: net.sub_actions(),
            widths: net.widths().into(),
            mode: mode.as_str().into(),
            seed,
            episode,
            gamma,
            env,
        }
    }

    pub fn mode(&self) -> Result<BaselineMode> {
        Ok(self.mode.parse::<BaselineMode>()?)
    }

    /// Rejects a checkpoint whose network shape differs from a requested run.
    pub fn expect_shape(&self, state_dim: usize, branches: usize, sub_actions: usize) -> Result<()> {
        if (self.state_dim, self.branches, self.sub_actions) != (state_dim, branches, sub_actions) {
            return Err(HarnessError::Shape(format!(
                "checkpoint has state_dim={}, n={}, N={} but the run needs state_dim={state_dim}, n={branches}, N={sub_actions}",
                self.state_dim, self.branches, self.sub_actions
            )));
        }
        Ok(())
    }
}

pub fn encode(net: &BranchingNet, meta: &CheckpointMeta) -> Vec<u8> {
    let mut out = serde_json::to_vec(meta).expect("header serializes");
    out.push(b'\n');
    let header_len = out.len();
    for s in net.slices() {
        for v in s {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    let payload_len = (out.len() - header_len) as u64;
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&payload_len.to_le_bytes());
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

pub fn decode(bytes: &[u8], path: &Path) -> Result<(BranchingNet, CheckpointMeta)> {
    let integrity = |message: String| HarnessError::Integrity {
        path: path.to_owned(),
        message,
    };
    let nl = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| integrity("no header line".into()))?;
    let meta: CheckpointMeta =
        serde_json::from_slice(&bytes[..nl]).map_err(|e| integrity(format!("unreadable header: {e}")))?;
    if meta.format != FORMAT {
        return Err(integrity(format!("unknown format `{}`", meta.format)));
    }
    if meta.version != VERSION {
        return Err(integrity(format!("version {} is not supported (expected {VERSION})", meta.version)));
    }

    let mut net = BranchingNet::zeros(meta.state_dim, meta.branches, meta.sub_actions, meta.widths.into())
        .map_err(|e| integrity(format!("header describes no valid network: {e}")))?;
    let payload_start = nl + 1;
    let expected = net.num_params() * 8;
    let total = payload_start + expected + 12;
    if bytes.len() != total {
        return Err(integrity(format!("expected {total} bytes, found {}", bytes.len())));
    }
    let payload_end = payload_start + expected;
    let stored_len = u64::from_le_bytes(bytes[payload_end..payload_end + 8].try_into().unwrap());
    if stored_len != expected as u64 {
        return Err(integrity(format!("length field {stored_len} does not match payload {expected}")));
    }
    let stored_crc = u32::from_le_bytes(bytes[payload_end + 8..].try_into().unwrap());
    let crc = crc32fast::hash(&bytes[..payload_end]);
    if crc != stored_crc {
        return Err(integrity(format!("checksum {crc:08x} does not match stored {stored_crc:08x}")));
    }

    let mut chunks = bytes[payload_start..payload_end].chunks_exact(8);
    for s in net.slices_mut() {
        for v in s.iter_mut() {
            *v = f64::from_le_bytes(chunks.next().unwrap().try_into().unwrap());
        }
    }
    Ok((net, meta))
}

pub fn save(path: &Path, net: &BranchingNet, meta: &CheckpointMeta) -> Result<()> {
    std::fs::write(path, encode(net, meta)).at(path)
}

pub fn load(path: &Path) -> Result<(BranchingNet, CheckpointMeta)> {
    let bytes = std::fs::read(path).at(path)?;
    decode(&bytes, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use abq_core::qnet::init_network;

    fn small() -> (BranchingNet, CheckpointMeta) {
        let w = NetWidths {
            trunk_hidden: 4,
            features: 3,
            head_hidden: 2,
        };
        let net = init_network(3, 2, 5, w, 9).unwrap();
        let meta = CheckpointMeta::new(&net, BaselineMode::AbqMaxMean, 9, 12, 0.99, EnvConfig::default());
        (net, meta)
    }

    #[test]
    fn bytes_round_trip() {
        let (net, meta) = small();
        let (back, m) = decode(&encode(&net, &meta), Path::new("c")).unwrap();
        assert_eq!(m, meta);
        let a: Vec<u64> = net.slices().concat().iter().map(|v| v.to_bits()).collect();
        let b: Vec<u64> = back.slices().concat().iter().map(|v| v.to_bits()).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn flipped_payload_bit_fails_checksum() {
        let (net, meta) = small();
        let mut bytes = encode(&net, &meta);
        let i = bytes.len() - 20;
        bytes[i] ^= 1;
        let err = decode(&bytes, Path::new("c")).unwrap_err();
        assert!(matches!(err, HarnessError::Integrity { .. }));
        assert!(err.to_string().contains("checksum"));
    }

    #[test]
    fn other_version_is_rejected() {
        let (net, mut meta) = small();
        meta.version = 2;
        let err = decode(&encode(&net, &meta), Path::new("c")).unwrap_err();
        assert!(err.to_string().contains("version 2"));
    }

    #[test]
    fn shape_check() {
        let (_, meta) = small();
        assert!(meta.expect_shape(3, 2, 5).is_ok());
        assert!(matches!(meta.expect_shape(3, 8, 5), Err(HarnessError::Shape(_))));
    }
}

//! Reward-model checkpoints: a versioned JSON header line followed by theta
//! as little-endian 64-bit floats.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{FeaturizerConfig, ModelKind, RewardModel, TrainMeta};
use crate::error::{Error, Result};

const MAGIC: &str = "prefcurate-rm";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    magic: String,
    version: u32,
    featurizer: FeaturizerConfig,
    kind: ModelKind,
    seed: u64,
    theta_len: usize,
    meta: Option<TrainMeta>,
}

pub fn save_checkpoint(model: &RewardModel, path: &Path) -> Result<()> {
    let header = Header {
        magic: MAGIC.to_string(),
        version: VERSION,
        featurizer: model.featurizer().clone(),
        kind: model.kind(),
        seed: model.meta().map(|m| m.config.seed).unwrap_or(0),
        theta_len: model.theta().len(),
        meta: model.meta().cloned(),
    };
    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut buf = serde_json::to_vec(&header)?;
    buf.push(b'\n');
    buf.reserve(model.theta().len() * 8);
    for v in model.theta() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    file.write_all(&buf).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<RewardModel> {
    let mut file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut bytes = Vec::new();
    file.read_to_end(&mut bytes).map_err(|e| Error::io(path, e))?;

    let newline = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::Checkpoint { path: path.into(), reason: "missing header line".into() })?;
    let header: Header = serde_json::from_slice(&bytes[..newline])?;
    if header.magic != MAGIC {
        return Err(Error::Checkpoint {
            path: path.into(),
            reason: format!("bad magic {:?}", header.magic),
        });
    }
    if header.version != VERSION {
        return Err(Error::Checkpoint {
            path: path.into(),
            reason: format!("unsupported version {}", header.version),
        });
    }
    let payload = &bytes[newline + 1..];
    if payload.len() != header.theta_len * 8 {
        return Err(Error::Checkpoint {
            path: path.into(),
            reason: format!(
                "theta payload is {} bytes, expected {}",
                payload.len(),
                header.theta_len * 8
            ),
        });
    }
    let theta: Vec<f64> = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    RewardModel::from_parts(header.featurizer, header.kind, theta, header.meta)
}

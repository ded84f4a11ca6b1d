//! Binary checkpoint layout (all integers and floats little-endian):
//!
//! ```text
//! magic      8 bytes  "RGPLCKPT"
//! version    u32      1
//! vocab_size u64
//! hidden_dim u64
//! out_dim    u64
//! seed       u64
//! step       u64
//! embedding  f64 x vocab_size*hidden_dim, row-major
//! projection f64 x hidden_dim*out_dim, row-major
//! bias       f64 x out_dim
//! ```
//!
//! A JSON manifest with the same header fields and the SHA-256 of the
//! binary file is written next to it (`<file>.json`).

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::EncoderParams;
use crate::error::{Error, Result};
use crate::util::sha256_hex;

const MAGIC: &[u8; 8] = b"RGPLCKPT";
const VERSION: u32 = 1;
const HEADER_LEN: usize = 8 + 4 + 5 * 8;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckpointManifest {
    pub format: String,
    pub version: u32,
    pub vocab_size: usize,
    pub hidden_dim: usize,
    pub out_dim: usize,
    pub seed: u64,
    pub step: u64,
    pub sha256: String,
    pub params_hash: String,
}

impl EncoderParams {
    pub fn to_bytes(&self, step: u64) -> Vec<u8> {
        let mut buf = Vec::with_capacity(HEADER_LEN + 8 * self.num_params());
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&VERSION.to_le_bytes());
        for v in [
            self.vocab_size as u64,
            self.hidden_dim as u64,
            self.out_dim as u64,
            self.seed,
            step,
        ] {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        for x in self.embedding.iter().chain(&self.projection).chain(&self.bias) {
            buf.extend_from_slice(&x.to_le_bytes());
        }
        buf
    }

    /// Parses [`EncoderParams::to_bytes`] output, returning the stored step too.
    pub fn from_bytes(bytes: &[u8]) -> Result<(Self, u64)> {
        let bad = |m: &str| Error::Serde(format!("checkpoint: {m}"));
        if bytes.len() < HEADER_LEN || &bytes[..8] != MAGIC {
            return Err(bad("bad magic"));
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
        if version != VERSION {
            return Err(bad(&format!("unsupported version {version}")));
        }
        let u = |i: usize| u64::from_le_bytes(bytes[12 + 8 * i..20 + 8 * i].try_into().unwrap());
        let (vocab_size, hidden_dim, out_dim) = (u(0) as usize, u(1) as usize, u(2) as usize);
        let (seed, step) = (u(3), u(4));
        let n_emb = vocab_size * hidden_dim;
        let n_proj = hidden_dim * out_dim;
        let total = n_emb + n_proj + out_dim;
        if bytes.len() != HEADER_LEN + 8 * total {
            return Err(bad("length does not match header dimensions"));
        }
        let floats: Vec<f64> = bytes[HEADER_LEN..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok((
            EncoderParams {
                vocab_size,
                hidden_dim,
                out_dim,
                seed,
                embedding: floats[..n_emb].to_vec(),
                projection: floats[n_emb..n_emb + n_proj].to_vec(),
                bias: floats[n_emb + n_proj..].to_vec(),
            },
            step,
        ))
    }

    /// SHA-256 over the parameter layout with step fixed at zero.
    pub fn content_hash(&self) -> String {
        sha256_hex(&self.to_bytes(0))
    }
}

fn manifest_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

pub fn save_checkpoint(params: &EncoderParams, step: u64, path: &Path) -> Result<CheckpointManifest> {
    let bytes = params.to_bytes(step);
    fs::write(path, &bytes).map_err(|e| Error::io(path, e))?;
    let manifest = CheckpointManifest {
        format: "rgpl-checkpoint".into(),
        version: VERSION,
        vocab_size: params.vocab_size,
        hidden_dim: params.hidden_dim,
        out_dim: params.out_dim,
        seed: params.seed,
        step,
        sha256: sha256_hex(&bytes),
        params_hash: params.content_hash(),
    };
    let mpath = manifest_path(path);
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Serde(e.to_string()))?;
    fs::write(&mpath, json).map_err(|e| Error::io(&mpath, e))?;
    Ok(manifest)
}

pub fn load_checkpoint(path: &Path) -> Result<(EncoderParams, u64)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    EncoderParams::from_bytes(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::init_params;

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.bin");
        let p = init_params(17, 3, 5, 4).unwrap();
        let m = save_checkpoint(&p, 42, &path).unwrap();
        let (q, step) = load_checkpoint(&path).unwrap();
        assert_eq!((q, step), (p.clone(), 42));
        assert_eq!(m.params_hash, p.content_hash());
        assert!(manifest_path(&path).exists());
    }

    #[test]
    fn truncated_file_rejected() {
        let p = init_params(5, 2, 2, 0).unwrap();
        let bytes = p.to_bytes(0);
        assert!(EncoderParams::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        assert!(EncoderParams::from_bytes(b"NOTACKPT").is_err());
    }
}

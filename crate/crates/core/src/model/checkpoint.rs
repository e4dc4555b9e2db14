//! Checkpoint archive: container header with run metadata and a tensor
//! table, followed by the tensors as little-endian `f64`.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{EncoderConfig, ParamTensor, ParameterSet};
use crate::container::{self, Reader};
use crate::error::{Error, Result};
use crate::tensor::Matrix;

pub const CHECKPOINT_VERSION: u32 = 1;
const MAGIC: &[u8; 8] = b"DGKDCKPT";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub version: u32,
    pub config: EncoderConfig,
    pub method: String,
    pub epoch: usize,
    pub seed: u64,
    pub combo: String,
    pub tokenizer_id: String,
    /// Domain-classifier label order (empty without a domain head).
    #[serde(default)]
    pub domains: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    meta: CheckpointMeta,
    tensors: Vec<TensorEntry>,
}

#[derive(Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    group: String,
    rows: usize,
    cols: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub meta: CheckpointMeta,
    pub params: ParameterSet,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let header = Header {
            meta: self.meta.clone(),
            tensors: self
                .params
                .tensors
                .iter()
                .map(|t| TensorEntry {
                    name: t.name.clone(),
                    group: t.group.clone(),
                    rows: t.value.rows(),
                    cols: t.value.cols(),
                })
                .collect(),
        };
        let mut payload = Vec::with_capacity(self.params.num_params() * 8);
        for t in &self.params.tensors {
            for v in t.value.data() {
                payload.extend_from_slice(&v.to_le_bytes());
            }
        }
        container::encode(MAGIC, CHECKPOINT_VERSION, &header, &payload)
    }

    /// SHA-256 of the serialized checkpoint.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_bytes()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        container::write_if_changed(path, &self.to_bytes()).map(|_| ())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let c = container::read::<Header>(path, MAGIC)?;
        if c.version != CHECKPOINT_VERSION || c.header.meta.version != CHECKPOINT_VERSION {
            return Err(Error::format(path, format!("unsupported checkpoint version {}", c.version)));
        }
        let mut reader = Reader::new(&c.payload);
        let mut tensors = Vec::with_capacity(c.header.tensors.len());
        for e in c.header.tensors {
            let data = reader
                .f64s(e.rows * e.cols)
                .ok_or_else(|| Error::format(path, format!("truncated tensor {}", e.name)))?;
            tensors.push(ParamTensor {
                name: e.name,
                group: e.group,
                value: Matrix::from_vec(e.rows, e.cols, data),
            });
        }
        if !reader.is_done() {
            return Err(Error::format(path, "trailing bytes after tensors"));
        }
        let meta = c.header.meta;
        let params = ParameterSet::from_tensors(meta.config.clone(), meta.domains.len(), tensors)?;
        Ok(Self { meta, params })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn save_load_roundtrip_is_exact() {
        let cfg = EncoderConfig {
            vocab_size: 9,
            num_layers: 2,
            hidden_dim: 4,
            num_heads: 2,
            ffn_dim: 6,
            max_len: 8,
            dropout: 0.1,
            init_std: 0.05,
        };
        let ckpt = Checkpoint {
            meta: CheckpointMeta {
                version: CHECKPOINT_VERSION,
                config: cfg.clone(),
                method: "domain_adv".into(),
                epoch: 2,
                seed: 11,
                combo: "wo-A".into(),
                tokenizer_id: "word-v1-x".into(),
                domains: vec!["B".into(), "C".into()],
            },
            params: ParameterSet::init(&cfg, 2, 3).unwrap(),
        };
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.ckpt");
        ckpt.save(&p).unwrap();
        let back = Checkpoint::load(&p).unwrap();
        assert_eq!(back, ckpt);
        assert_eq!(back.hash(), ckpt.hash());
        std::fs::write(&p, &ckpt.to_bytes()[..ckpt.to_bytes().len() - 3]).unwrap();
        assert!(Checkpoint::load(&p).is_err());
    }
}

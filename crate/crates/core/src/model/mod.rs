//! Transformer span-extraction model.

mod checkpoint;
mod decode;
mod encoder;
mod params;
mod split;

use serde::{Deserialize, Serialize};

pub use checkpoint::{Checkpoint, CheckpointMeta, CHECKPOINT_VERSION};
pub use decode::{decode_span, predict_example_text, SpanChoice, DEFAULT_MAX_ANSWER_LEN};
pub use encoder::{
    domain_logits, encode, forward_on_tape, forward_span, pooled_on_tape, pooled_repr, span_heads, span_logits, ForwardOutput,
};
pub use params::{
    grads_axpy, grads_from_flat, grads_to_flat, Bound, Grads, ParamTensor, ParameterSet, DOMAIN_HEAD, EMBEDDINGS, SPAN_HEAD,
};
pub use split::{split_parameters, ParameterSplit, Side};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub vocab_size: usize,
    pub num_layers: usize,
    pub hidden_dim: usize,
    pub num_heads: usize,
    pub ffn_dim: usize,
    pub max_len: usize,
    pub dropout: f64,
    #[serde(default = "default_init_std")]
    pub init_std: f64,
}

fn default_init_std() -> f64 {
    0.02
}

impl EncoderConfig {
    /// Desk-scale student: 2 layers, width 64, 2 heads.
    pub fn student(vocab_size: usize, max_len: usize) -> Self {
        Self {
            vocab_size,
            num_layers: 2,
            hidden_dim: 64,
            num_heads: 2,
            ffn_dim: 256,
            max_len,
            dropout: 0.1,
            init_std: default_init_std(),
        }
    }

    /// Desk-scale teacher: 4 layers, width 128, 4 heads.
    pub fn teacher(vocab_size: usize, max_len: usize) -> Self {
        Self {
            vocab_size,
            num_layers: 4,
            hidden_dim: 128,
            num_heads: 4,
            ffn_dim: 512,
            max_len,
            dropout: 0.1,
            init_std: default_init_std(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_layers < 1 {
            return Err(Error::InvalidArgument("num_layers must be at least 1".into()));
        }
        if self.num_heads == 0 || self.hidden_dim % self.num_heads != 0 {
            return Err(Error::InvalidArgument(format!(
                "hidden_dim {} not divisible by num_heads {}",
                self.hidden_dim, self.num_heads
            )));
        }
        if self.vocab_size < 4 || self.max_len < 4 || self.ffn_dim == 0 {
            return Err(Error::InvalidArgument("degenerate encoder dimensions".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::InvalidArgument(format!("dropout {} outside [0, 1)", self.dropout)));
        }
        Ok(())
    }

    pub fn head_dim(&self) -> usize {
        self.hidden_dim / self.num_heads
    }
}

/// Per-position start and end scores for one window.
#[derive(Clone, Debug, PartialEq)]
pub struct SpanLogits {
    pub start: Vec<f64>,
    pub end: Vec<f64>,
}

impl SpanLogits {
    pub fn len(&self) -> usize {
        self.start.len()
    }

    pub fn is_empty(&self) -> bool {
        self.start.is_empty()
    }
}

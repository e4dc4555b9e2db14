use serde::{Deserialize, Serialize};

use super::params::{DOMAIN_HEAD, EMBEDDINGS, SPAN_HEAD};
use super::ParameterSet;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Lower,
    Upper,
}

/// Partition of parameter groups after transformer layer `split_layer`:
/// embeddings and blocks `1..=k` below, blocks `k+1..=L` and heads above.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParameterSplit {
    pub split_layer: usize,
    pub lower: Vec<String>,
    pub upper: Vec<String>,
    pub trainable_side: Side,
}

impl ParameterSplit {
    pub fn trainable_groups(&self) -> &[String] {
        match self.trainable_side {
            Side::Lower => &self.lower,
            Side::Upper => &self.upper,
        }
    }

    pub fn is_trainable(&self, group: &str) -> bool {
        self.trainable_groups().iter().any(|g| g == group)
    }

    /// Per-tensor trainability mask for `params`.
    pub fn tensor_mask(&self, params: &ParameterSet) -> Vec<bool> {
        params.tensors.iter().map(|t| self.is_trainable(&t.group)).collect()
    }
}

pub fn split_parameters(params: &ParameterSet, k: usize, trainable_side: Side) -> Result<ParameterSplit> {
    let layers = params.config.num_layers;
    if layers < 2 || k < 1 || k > layers - 1 {
        return Err(Error::LayerOutOfRange {
            k,
            max: layers.saturating_sub(1),
        });
    }
    let mut lower = vec![EMBEDDINGS.to_string()];
    let mut upper = Vec::new();
    for l in 1..=layers {
        let g = format!("block{l}");
        if l <= k {
            lower.push(g);
        } else {
            upper.push(g);
        }
    }
    upper.push(SPAN_HEAD.to_string());
    if params.num_domains > 0 {
        upper.push(DOMAIN_HEAD.to_string());
    }
    Ok(ParameterSplit {
        split_layer: k,
        lower,
        upper,
        trainable_side,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::EncoderConfig;
    use std::collections::BTreeSet;

    fn params(layers: usize) -> ParameterSet {
        let cfg = EncoderConfig {
            vocab_size: 8,
            num_layers: layers,
            hidden_dim: 4,
            num_heads: 1,
            ffn_dim: 4,
            max_len: 6,
            dropout: 0.0,
            init_std: 0.1,
        };
        ParameterSet::init(&cfg, 0, 0).unwrap()
    }

    #[test]
    fn four_layers_split_after_two() {
        let s = split_parameters(&params(4), 2, Side::Upper).unwrap();
        assert_eq!(s.lower, ["embeddings", "block1", "block2"]);
        assert_eq!(s.upper, ["block3", "block4", "span_head"]);
        let last = split_parameters(&params(4), 3, Side::Lower).unwrap();
        assert_eq!(last.upper, ["block4", "span_head"]);
    }

    #[test]
    fn every_split_partitions_all_groups() {
        let p = params(5);
        let all: BTreeSet<String> = p.groups().into_iter().collect();
        for k in 1..=4 {
            let s = split_parameters(&p, k, Side::Lower).unwrap();
            let lower: BTreeSet<_> = s.lower.iter().cloned().collect();
            let upper: BTreeSet<_> = s.upper.iter().cloned().collect();
            assert!(lower.is_disjoint(&upper));
            assert_eq!(&lower | &upper, all);
        }
    }

    #[test]
    fn out_of_range_layers_are_rejected() {
        let p = params(4);
        assert!(matches!(split_parameters(&p, 0, Side::Lower), Err(Error::LayerOutOfRange { .. })));
        assert!(matches!(split_parameters(&p, 4, Side::Lower), Err(Error::LayerOutOfRange { .. })));
        assert!(split_parameters(&params(1), 1, Side::Lower).is_err());
    }

    #[test]
    fn mask_follows_trainable_side() {
        let p = params(2);
        let s = split_parameters(&p, 1, Side::Lower).unwrap();
        let mask = s.tensor_mask(&p);
        for (t, m) in p.tensors.iter().zip(mask) {
            assert_eq!(m, t.group == "embeddings" || t.group == "block1");
        }
    }
}

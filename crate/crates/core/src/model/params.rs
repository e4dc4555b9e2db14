use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::EncoderConfig;
use crate::autograd::{Gradients, Tape, Var};
use crate::error::{Error, Result};
use crate::tensor::{Matrix, Real};

pub const EMBEDDINGS: &str = "embeddings";
pub const SPAN_HEAD: &str = "span_head";
pub const DOMAIN_HEAD: &str = "domain_head";

const BLOCK_TENSORS: [&str; 16] = [
    "wq", "bq", "wk", "bk", "wv", "bv", "wo", "bo", "ln1_g", "ln1_b", "w1", "b1", "w2", "b2", "ln2_g", "ln2_b",
];

pub(crate) const TOK: usize = 0;
pub(crate) const POS: usize = 1;
pub(crate) const EMB_LN_G: usize = 2;
pub(crate) const EMB_LN_B: usize = 3;
pub(crate) const WQ: usize = 0;
pub(crate) const BQ: usize = 1;
pub(crate) const WK: usize = 2;
pub(crate) const BK: usize = 3;
pub(crate) const WV: usize = 4;
pub(crate) const BV: usize = 5;
pub(crate) const WO: usize = 6;
pub(crate) const BO: usize = 7;
pub(crate) const LN1_G: usize = 8;
pub(crate) const LN1_B: usize = 9;
pub(crate) const W1: usize = 10;
pub(crate) const B1: usize = 11;
pub(crate) const W2: usize = 12;
pub(crate) const B2: usize = 13;
pub(crate) const LN2_G: usize = 14;
pub(crate) const LN2_B: usize = 15;

/// Per-tensor gradients, aligned with [`ParameterSet::tensors`].
pub type Grads = Vec<Matrix>;

#[derive(Clone, Debug, PartialEq)]
pub struct ParamTensor {
    pub name: String,
    pub group: String,
    pub value: Matrix,
}

/// All model weights, grouped as `embeddings`, `block1..blockL`,
/// `span_head` and (optionally) `domain_head`.
#[derive(Clone, Debug, PartialEq)]
pub struct ParameterSet {
    pub config: EncoderConfig,
    pub num_domains: usize,
    pub tensors: Vec<ParamTensor>,
}

/// Tape handles for one bound [`ParameterSet`], in tensor order.
#[derive(Clone, Debug)]
pub struct Bound {
    pub vars: Vec<Var>,
    pub num_layers: usize,
    pub has_domain_head: bool,
}

impl Bound {
    pub(crate) fn emb(&self, k: usize) -> Var {
        self.vars[k]
    }

    pub(crate) fn block(&self, layer: usize, k: usize) -> Var {
        self.vars[4 + 16 * layer + k]
    }

    pub(crate) fn span_w(&self) -> Var {
        self.vars[4 + 16 * self.num_layers]
    }

    pub(crate) fn span_b(&self) -> Var {
        self.vars[5 + 16 * self.num_layers]
    }

    pub(crate) fn domain_head(&self) -> Option<(Var, Var)> {
        self.has_domain_head.then(|| {
            let base = 6 + 16 * self.num_layers;
            (self.vars[base], self.vars[base + 1])
        })
    }
}

impl ParameterSet {
    /// Random initialization; `num_domains > 0` adds a linear domain classifier.
    pub fn init(config: &EncoderConfig, num_domains: usize, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, config.init_std).expect("finite std");
        let d = config.hidden_dim;
        let mut tensors = Vec::new();
        let mut push = |name: String, group: &str, value: Matrix| {
            tensors.push(ParamTensor {
                name,
                group: group.to_string(),
                value,
            })
        };
        let mut randn = |r: usize, c: usize| {
            Matrix::from_vec(r, c, (0..r * c).map(|_| normal.sample(&mut rng)).collect())
        };
        push("tok_emb".into(), EMBEDDINGS, randn(config.vocab_size, d));
        push("pos_emb".into(), EMBEDDINGS, randn(config.max_len, d));
        push("emb_ln_g".into(), EMBEDDINGS, Matrix::filled(1, d, 1.0));
        push("emb_ln_b".into(), EMBEDDINGS, Matrix::zeros(1, d));
        for l in 0..config.num_layers {
            let group = format!("block{}", l + 1);
            for (k, name) in BLOCK_TENSORS.iter().enumerate() {
                let value = match k {
                    WQ | WK | WV | WO => randn(d, d),
                    W1 => randn(d, config.ffn_dim),
                    B1 => Matrix::zeros(1, config.ffn_dim),
                    W2 => randn(config.ffn_dim, d),
                    LN1_G | LN2_G => Matrix::filled(1, d, 1.0),
                    _ => Matrix::zeros(1, d),
                };
                push(format!("{group}.{name}"), &group, value);
            }
        }
        push("span_w".into(), SPAN_HEAD, randn(d, 2));
        push("span_b".into(), SPAN_HEAD, Matrix::zeros(1, 2));
        if num_domains > 0 {
            push("domain_w".into(), DOMAIN_HEAD, randn(d, num_domains));
            push("domain_b".into(), DOMAIN_HEAD, Matrix::zeros(1, num_domains));
        }
        Ok(Self {
            config: config.clone(),
            num_domains,
            tensors,
        })
    }

    /// Rebuilds a set from stored tensors, checking them against `config`.
    pub fn from_tensors(config: EncoderConfig, num_domains: usize, tensors: Vec<ParamTensor>) -> Result<Self> {
        let reference = Self::init(&config, num_domains, 0)?;
        if reference.tensors.len() != tensors.len() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} tensors, found {}",
                reference.tensors.len(),
                tensors.len()
            )));
        }
        for (r, t) in reference.tensors.iter().zip(&tensors) {
            if r.name != t.name || r.group != t.group || r.value.shape() != t.value.shape() {
                return Err(Error::ShapeMismatch(format!(
                    "tensor {} {:?} does not match expected {} {:?}",
                    t.name,
                    t.value.shape(),
                    r.name,
                    r.value.shape()
                )));
            }
        }
        Ok(Self {
            config,
            num_domains,
            tensors,
        })
    }

    /// Replaces (or adds) the domain classifier head.
    pub fn with_domain_head(mut self, num_domains: usize, seed: u64) -> Self {
        self.tensors.retain(|t| t.group != DOMAIN_HEAD);
        self.num_domains = num_domains;
        if num_domains > 0 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xD0_4A1E);
            let normal = Normal::new(0.0, self.config.init_std).expect("finite std");
            let d = self.config.hidden_dim;
            let w = Matrix::from_vec(d, num_domains, (0..d * num_domains).map(|_| normal.sample(&mut rng)).collect());
            self.tensors.push(ParamTensor {
                name: "domain_w".into(),
                group: DOMAIN_HEAD.into(),
                value: w,
            });
            self.tensors.push(ParamTensor {
                name: "domain_b".into(),
                group: DOMAIN_HEAD.into(),
                value: Matrix::zeros(1, num_domains),
            });
        }
        self
    }

    pub fn num_params(&self) -> usize {
        self.tensors.iter().map(|t| t.value.len()).sum()
    }

    /// Group names in layer order.
    pub fn groups(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for t in &self.tensors {
            if out.last() != Some(&t.group) {
                out.push(t.group.clone());
            }
        }
        out
    }

    pub fn bind<T: Real>(&self, tape: &mut Tape<T>) -> Bound {
        self.bind_with(tape, |_, t| (Matrix::lift(&t.value), true))
    }

    /// Binds every tensor through `f`, which returns the value to place on the
    /// tape and whether it is trainable.
    pub fn bind_with<T: Real>(
        &self,
        tape: &mut Tape<T>,
        mut f: impl FnMut(usize, &ParamTensor) -> (Matrix<T>, bool),
    ) -> Bound {
        let vars = self
            .tensors
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let (value, trainable) = f(i, t);
                if trainable {
                    tape.param(value)
                } else {
                    tape.constant(value)
                }
            })
            .collect();
        Bound {
            vars,
            num_layers: self.config.num_layers,
            has_domain_head: self.num_domains > 0,
        }
    }

    pub fn zero_grads(&self) -> Grads {
        self.tensors
            .iter()
            .map(|t| Matrix::zeros(t.value.rows(), t.value.cols()))
            .collect()
    }

    /// Primal gradients for every bound tensor (zero where none flowed).
    pub fn collect_grads<T: Real>(&self, grads: &Gradients<T>, bound: &Bound) -> Grads {
        self.tensors
            .iter()
            .zip(&bound.vars)
            .map(|(t, &v)| match grads.get(v) {
                Some(g) => g.values(),
                None => Matrix::zeros(t.value.rows(), t.value.cols()),
            })
            .collect()
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.tensors.iter().flat_map(|t| t.value.data().iter().copied()).collect()
    }

    pub fn set_flat(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.num_params());
        let mut off = 0;
        for t in &mut self.tensors {
            let n = t.value.len();
            t.value.data_mut().copy_from_slice(&flat[off..off + n]);
            off += n;
        }
    }
}

pub fn grads_to_flat(g: &Grads) -> Vec<f64> {
    g.iter().flat_map(|m| m.data().iter().copied()).collect()
}

pub fn grads_from_flat(template: &ParameterSet, flat: &[f64]) -> Grads {
    let mut off = 0;
    template
        .tensors
        .iter()
        .map(|t| {
            let n = t.value.len();
            let m = Matrix::from_vec(t.value.rows(), t.value.cols(), flat[off..off + n].to_vec());
            off += n;
            m
        })
        .collect()
}

/// `acc += c * g`
pub fn grads_axpy(acc: &mut Grads, c: f64, g: &Grads) {
    for (a, b) in acc.iter_mut().zip(g) {
        for (x, &y) in a.data_mut().iter_mut().zip(b.data()) {
            *x += c * y;
        }
    }
}

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Erm,
    KdGold,
    KdAug,
    DomainAdv,
    Episodic,
    Mldg,
    KdDomainAdv,
    KdEpisodic,
    KdMldg,
}

impl Method {
    pub const ALL: [Method; 9] = [
        Method::Erm,
        Method::KdGold,
        Method::KdAug,
        Method::DomainAdv,
        Method::Episodic,
        Method::Mldg,
        Method::KdDomainAdv,
        Method::KdEpisodic,
        Method::KdMldg,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Erm => "erm",
            Method::KdGold => "kd_gold",
            Method::KdAug => "kd_aug",
            Method::DomainAdv => "domain_adv",
            Method::Episodic => "episodic",
            Method::Mldg => "mldg",
            Method::KdDomainAdv => "kd_domain_adv",
            Method::KdEpisodic => "kd_episodic",
            Method::KdMldg => "kd_mldg",
        }
    }

    /// Trains against teacher logits rather than gold spans.
    pub fn uses_teacher(self) -> bool {
        matches!(
            self,
            Method::KdGold | Method::KdAug | Method::KdDomainAdv | Method::KdEpisodic | Method::KdMldg
        )
    }

    pub fn needs_companions(self) -> bool {
        matches!(self, Method::Episodic | Method::KdEpisodic)
    }

    pub fn needs_domain_head(self) -> bool {
        matches!(self, Method::DomainAdv | Method::KdDomainAdv)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Method::ALL.iter().map(|m| m.as_str()).collect();
                Error::InvalidArgument(format!("unknown method `{s}` (expected one of {})", names.join(", ")))
            })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OptimizerConfig {
    /// Adam with decoupled weight decay and linear warmup then linear decay.
    AdamW {
        beta1: f64,
        beta2: f64,
        eps: f64,
        weight_decay: f64,
        warmup_frac: f64,
    },
    Sgd,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig::AdamW {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.01,
            warmup_frac: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub method: Method,
    pub learning_rate: f64,
    /// Gold-data epochs; checkpoint selection is over these.
    pub epochs: usize,
    /// Synthetic-stage epochs (augmented KD only).
    pub synthetic_epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub tau: f64,
    pub lambda_adv: f64,
    pub lambda_erm: f64,
    pub beta: f64,
    /// MLDG inner step; `None` means the outer learning rate.
    pub inner_lr: Option<f64>,
    pub first_order_mldg: bool,
    pub optimizer: OptimizerConfig,
    pub max_answer_len: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self::for_method(Method::Erm)
    }
}

impl TrainConfig {
    /// Defaults for `method`, including its tuned method-specific
    /// hyperparameters.
    pub fn for_method(method: Method) -> Self {
        let (tau, lambda_adv, lambda_erm, beta) = match method {
            Method::KdGold => (2.0, 0.1, 0.75, 1.0),
            Method::KdAug => (4.0, 0.1, 0.75, 1.0),
            Method::KdDomainAdv => (1.0, 0.01, 0.75, 1.0),
            Method::KdEpisodic => (1.0, 0.1, 0.75, 1.0),
            Method::KdMldg => (4.0, 0.1, 0.75, 1.0),
            _ => (1.0, 0.1, 0.75, 1.0),
        };
        TrainConfig {
            method,
            learning_rate: 3e-5,
            epochs: 2,
            synthetic_epochs: if method == Method::KdAug { 1 } else { 0 },
            batch_size: 32,
            seed: 0,
            tau,
            lambda_adv,
            lambda_erm,
            beta,
            inner_lr: None,
            first_order_mldg: false,
            optimizer: OptimizerConfig::default(),
            max_answer_len: crate::model::DEFAULT_MAX_ANSWER_LEN,
        }
    }

    pub fn lambda_episodic(&self) -> f64 {
        1.0 - self.lambda_erm
    }

    pub fn alpha(&self) -> f64 {
        self.inner_lr.unwrap_or(self.learning_rate)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1".into());
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1".into());
        }
        if !(self.tau > 0.0) {
            return bad(format!("tau must be positive, got {}", self.tau));
        }
        if !(self.lambda_adv >= 0.0) {
            return bad(format!("lambda_adv must be non-negative, got {}", self.lambda_adv));
        }
        if !(0.0..=1.0).contains(&self.lambda_erm) {
            return bad(format!("lambda_erm must lie in [0, 1], got {}", self.lambda_erm));
        }
        if !(self.beta >= 0.0) {
            return bad(format!("beta must be non-negative, got {}", self.beta));
        }
        if let Some(a) = self.inner_lr {
            if !(a > 0.0) {
                return bad(format!("inner_lr must be positive, got {a}"));
            }
        }
        Ok(())
    }
}

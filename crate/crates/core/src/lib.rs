//! Multi-source domain generalization for extractive reading comprehension.
//!
//! The crate covers the whole experimental loop at desk scale:
//!
//! * [`data`]: MRQA JSON-lines ingestion, sliding windows, domain balancing,
//!   single-domain batching and leave-one-out source combinations;
//! * [`model`]: a small transformer encoder with start/end span heads, a
//!   pooled representation for domain classification and layer splits;
//! * [`trainers`]: ERM, knowledge distillation (gold-only and with synthetic
//!   questions), domain-adversarial training, episodic training with random
//!   layer splits, MLDG with exact second-order meta-gradients, and the
//!   KD + domain-invariant combinations;
//! * [`synthesis`]: top-k / top-p question sampling and a template generator;
//! * [`eval`]: token F1, aggregation, coverage, paired t-tests and reports.

pub mod autograd;
pub mod container;
pub mod data;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod model;
pub mod synthesis;
pub mod tensor;
pub mod tokenizer;
pub mod toy;
pub mod trainers;

pub use error::{Error, Result};

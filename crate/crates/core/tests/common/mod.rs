//! Small toy-corpus fixtures shared by the integration tests.
#![allow(dead_code)]

use dgkd_core::data::{make_windows, DomainDataset, WindowConfig};
use dgkd_core::model::EncoderConfig;
use dgkd_core::tokenizer::{Tokenizer, WordTokenizer};
use dgkd_core::toy::{toy_corpus, ToyCorpusConfig};
use dgkd_core::trainers::TrainInputs;

pub const MAX_LEN: usize = 40;

pub struct Fixture {
    pub tokenizer: WordTokenizer,
    pub tokenizer_id: String,
    pub train: Vec<DomainDataset>,
    pub dev: Vec<DomainDataset>,
    pub test: Vec<DomainDataset>,
}

impl Fixture {
    pub fn inputs(&self) -> TrainInputs<'_> {
        TrainInputs {
            train: &self.train,
            dev: &self.dev,
            tokenizer_id: &self.tokenizer_id,
            combo: "all",
        }
    }

    pub fn model(&self) -> EncoderConfig {
        EncoderConfig {
            vocab_size: self.tokenizer.vocab_size(),
            num_layers: 2,
            hidden_dim: 8,
            num_heads: 2,
            ffn_dim: 16,
            max_len: MAX_LEN,
            dropout: 0.1,
            init_std: 0.1,
        }
    }
}

/// Three source domains with uneven sizes, two target domains.
pub fn fixture(train_per_domain: usize, seed: u64) -> Fixture {
    let corpus = toy_corpus(&ToyCorpusConfig {
        train_per_domain,
        dev_per_domain: 6,
        test_per_domain: 6,
        entities_per_passage: 1,
        seed,
        ..ToyCorpusConfig::default()
    });
    let mut train_raw = corpus.train_sets();
    // Uneven domain sizes exercise upsampling.
    let keep = train_raw[1].examples.len() / 2;
    train_raw[1].examples.truncate(keep.max(1));
    let texts: Vec<&str> = train_raw
        .iter()
        .flat_map(|d| d.examples.iter().flat_map(|e| [e.question.as_str(), e.passage.as_str()]))
        .collect();
    let tokenizer = WordTokenizer::fit(texts, 1, 5_000);
    let win = |sets: &[DomainDataset], cfg: WindowConfig| -> Vec<DomainDataset> {
        sets.iter().map(|d| make_windows(d, &tokenizer, &cfg).unwrap()).collect()
    };
    let train = win(&train_raw, WindowConfig::training(MAX_LEN));
    let dev = win(&corpus.dev_sets(), WindowConfig::evaluation(MAX_LEN));
    let test = win(&corpus.targets, WindowConfig::evaluation(MAX_LEN));
    Fixture {
        tokenizer_id: tokenizer.id().to_string(),
        tokenizer,
        train,
        dev,
        test,
    }
}

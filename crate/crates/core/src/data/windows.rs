//! Sliding windows over passages and the on-disk window cache.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{char_to_byte, DomainDataset, RCExample, Split, Window};
use crate::container;
use crate::error::{Error, Result};
use crate::tokenizer::{Token, Tokenizer, CLS_ID, PAD_ID, SEP_ID};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowConfig {
    pub max_len: usize,
    /// Step between consecutive window starts, in passage tokens. Clamped to
    /// the passage room of each window so no token is skipped.
    pub stride: usize,
    /// Keep windows without a complete gold answer (dev/test).
    pub keep_unanswered: bool,
}

impl WindowConfig {
    pub fn training(max_len: usize) -> Self {
        Self {
            max_len,
            stride: max_len / 2,
            keep_unanswered: false,
        }
    }

    pub fn evaluation(max_len: usize) -> Self {
        Self {
            max_len,
            stride: max_len / 2,
            keep_unanswered: true,
        }
    }

    pub fn for_split(split: Split, max_len: usize) -> Self {
        match split {
            Split::Train => Self::training(max_len),
            // synthetic windows carry no labels, so nothing could be filtered
            Split::Dev | Split::Test | Split::Synthetic => Self::evaluation(max_len),
        }
    }
}

/// Token index range (inclusive) covering a byte span, if any token overlaps it.
fn token_range(tokens: &[Token], start: usize, end: usize) -> Option<(usize, usize)> {
    let first = tokens.iter().position(|t| t.end > start)?;
    let last = tokens.iter().rposition(|t| t.start < end)?;
    (first <= last).then_some((first, last))
}

fn example_windows(
    ex: &RCExample,
    tokenizer: &dyn Tokenizer,
    cfg: &WindowConfig,
) -> Result<Vec<Window>> {
    let q: Vec<usize> = tokenizer.encode(&ex.question).iter().map(|t| t.id).collect();
    if q.len() + 4 > cfg.max_len {
        return Err(Error::QuestionTooLong {
            qid: ex.qid.clone(),
            max_len: cfg.max_len,
        });
    }
    let p = tokenizer.encode(&ex.passage);
    if p.is_empty() {
        return Ok(Vec::new());
    }
    let room = cfg.max_len - q.len() - 3;
    let step = cfg.stride.clamp(1, room);

    let answer_tokens: Vec<(usize, usize)> = ex
        .answer_spans
        .iter()
        .filter_map(|s| {
            let a = char_to_byte(&ex.passage, s.start);
            let b = char_to_byte(&ex.passage, s.end);
            token_range(&p, a, b)
        })
        .collect();

    let q_span = (1, 1 + q.len());
    let p_base = q.len() + 2;
    let mut out = Vec::new();
    let mut offset = 0;
    loop {
        let end = (offset + room).min(p.len());
        let label = answer_tokens
            .iter()
            .find(|(s, e)| *s >= offset && *e < end)
            .map(|(s, e)| (s - offset + p_base, e - offset + p_base));
        if label.is_some() || cfg.keep_unanswered {
            let mut ids = Vec::with_capacity(cfg.max_len);
            ids.push(CLS_ID);
            ids.extend_from_slice(&q);
            ids.push(SEP_ID);
            ids.extend(p[offset..end].iter().map(|t| t.id));
            ids.push(SEP_ID);
            let num_tokens = ids.len();
            ids.resize(cfg.max_len, PAD_ID);
            out.push(Window {
                window_id: format!("{}#{offset}", ex.qid),
                qid: ex.qid.clone(),
                domain: ex.domain.clone(),
                token_ids: ids,
                num_tokens,
                question_span: q_span,
                passage_span: (p_base, p_base + end - offset),
                passage_offsets: p[offset..end].iter().map(|t| (t.start, t.end)).collect(),
                start_label: label.map(|l| l.0),
                end_label: label.map(|l| l.1),
            });
        }
        if end == p.len() {
            break;
        }
        offset += step;
    }
    Ok(out)
}

/// Tokenizes and windows every example of `ds`. With `keep_unanswered` off,
/// only windows holding a complete gold answer survive, each labeled with the
/// first such answer occurrence.
pub fn make_windows(ds: &DomainDataset, tokenizer: &dyn Tokenizer, cfg: &WindowConfig) -> Result<DomainDataset> {
    if cfg.stride >= cfg.max_len {
        return Err(Error::InvalidArgument(format!(
            "stride {} must be below max_len {}",
            cfg.stride, cfg.max_len
        )));
    }
    let mut windows = Vec::new();
    for ex in &ds.examples {
        windows.extend(example_windows(ex, tokenizer, cfg)?);
    }
    Ok(DomainDataset {
        name: ds.name.clone(),
        split: ds.split,
        examples: ds.examples.clone(),
        windows,
    })
}

const WINDOW_MAGIC: &[u8; 8] = b"DGKDWIN\0";
const WINDOW_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowCacheMeta {
    pub tokenizer_id: String,
    pub config: WindowConfig,
    pub dataset: String,
    pub split: Split,
    pub examples: usize,
    pub windows: usize,
}

/// Serializes a windowed dataset; returns whether the file changed.
pub fn save_window_cache(path: &Path, ds: &DomainDataset, tokenizer_id: &str, cfg: &WindowConfig) -> Result<bool> {
    let meta = WindowCacheMeta {
        tokenizer_id: tokenizer_id.to_string(),
        config: *cfg,
        dataset: ds.name.clone(),
        split: ds.split,
        examples: ds.examples.len(),
        windows: ds.windows.len(),
    };
    let payload = serde_json::to_vec(ds).expect("dataset serializes");
    let bytes = container::encode(WINDOW_MAGIC, WINDOW_VERSION, &meta, &payload);
    container::write_if_changed(path, &bytes)
}

pub fn load_window_cache(path: &Path) -> Result<(WindowCacheMeta, DomainDataset)> {
    let c = container::read::<WindowCacheMeta>(path, WINDOW_MAGIC)?;
    if c.version != WINDOW_VERSION {
        return Err(Error::format(path, format!("unsupported window cache version {}", c.version)));
    }
    let ds: DomainDataset =
        serde_json::from_slice(&c.payload).map_err(|e| Error::format(path, e.to_string()))?;
    Ok((c.header, ds))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::AnswerSpan;
    use crate::tokenizer::WordTokenizer;

    fn example(passage: &str, answer: &str) -> RCExample {
        let start_b = passage.find(answer).unwrap();
        let start = passage[..start_b].chars().count();
        RCExample {
            qid: "q".into(),
            question: "what is it".into(),
            passage: passage.into(),
            domain: "D".into(),
            answers: vec![answer.into()],
            answer_spans: vec![AnswerSpan {
                text: answer.into(),
                start,
                end: start + answer.chars().count(),
            }],
        }
    }

    fn tok_for(ex: &RCExample) -> WordTokenizer {
        WordTokenizer::fit([ex.passage.as_str(), ex.question.as_str()], 1, 1000)
    }

    #[test]
    fn short_passage_yields_one_labeled_window() {
        let ex = example("the sky is blue today", "blue");
        let ds = DomainDataset::new("D", Split::Train, vec![ex.clone()]);
        let tok = tok_for(&ex);
        let out = make_windows(&ds, &tok, &WindowConfig::training(32)).unwrap();
        assert_eq!(out.windows.len(), 1);
        let w = &out.windows[0];
        assert_eq!(w.token_ids.len(), 32);
        assert_eq!(w.question_span, (1, 4));
        assert_eq!(w.passage_span, (5, 10));
        assert_eq!(w.labels(), Some((8, 8)));
        let (a, b) = w.byte_range(8, 8);
        assert_eq!(&ex.passage[a..b], "blue");
    }

    #[test]
    fn only_the_answer_window_survives_filtering() {
        // 12 passage tokens, room = 16 - 3 - 3 = 10 ... use stride 5 without overlap issues
        let passage = "a0 a1 a2 a3 a4 a5 a6 a7 a8 a9 a10 a11 a12 a13 a14";
        let ex = example(passage, "a7");
        let ds = DomainDataset::new("D", Split::Train, vec![ex.clone()]);
        let tok = tok_for(&ex);
        // room = 11 - 3 - 3 = 5, stride 5 -> windows [0,5) [5,10) [10,15)
        let cfg = WindowConfig {
            max_len: 11,
            stride: 5,
            keep_unanswered: false,
        };
        let out = make_windows(&ds, &tok, &cfg).unwrap();
        assert_eq!(out.windows.len(), 1);
        assert_eq!(out.windows[0].window_id, "q#5");
        let all = make_windows(&ds, &tok, &WindowConfig { keep_unanswered: true, ..cfg }).unwrap();
        assert_eq!(all.windows.len(), 3);
        assert_eq!(all.windows.iter().filter(|w| w.is_labeled()).count(), 1);
    }

    #[test]
    fn answer_straddling_a_boundary_is_dropped_from_that_window() {
        let passage = "w0 w1 w2 w3 w4 big cat w7 w8 w9";
        let ex = example(passage, "big cat");
        let ds = DomainDataset::new("D", Split::Train, vec![ex.clone()]);
        let tok = tok_for(&ex);
        let cfg = WindowConfig {
            max_len: 12,
            stride: 3,
            keep_unanswered: false,
        };
        let out = make_windows(&ds, &tok, &cfg).unwrap();
        assert!(!out.windows.is_empty());
        for w in &out.windows {
            let (s, e) = w.labels().unwrap();
            let (a, b) = w.byte_range(s, e);
            assert_eq!(&ex.passage[a..b], "big cat");
        }
    }

    #[test]
    fn question_longer_than_window_is_an_error() {
        let mut ex = example("short passage", "short");
        ex.question = "one two three four five six seven eight".into();
        let ds = DomainDataset::new("D", Split::Train, vec![ex.clone()]);
        let tok = tok_for(&ex);
        match make_windows(&ds, &tok, &WindowConfig::training(10)) {
            Err(Error::QuestionTooLong { qid, .. }) => assert_eq!(qid, "q"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn cache_roundtrip_preserves_windows_and_metadata() {
        let ex = example("the sky is blue today", "blue");
        let ds = DomainDataset::new("D", Split::Train, vec![ex.clone()]);
        let tok = tok_for(&ex);
        let cfg = WindowConfig::training(32);
        let out = make_windows(&ds, &tok, &cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("w.bin");
        assert!(save_window_cache(&p, &out, tok.id(), &cfg).unwrap());
        assert!(!save_window_cache(&p, &out, tok.id(), &cfg).unwrap());
        let (meta, back) = load_window_cache(&p).unwrap();
        assert_eq!(meta.tokenizer_id, tok.id());
        assert_eq!(meta.config, cfg);
        assert_eq!(back, out);
    }
}

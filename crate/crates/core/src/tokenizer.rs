//! Tokenizer interface and the bundled word-level tokenizer.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const PAD_ID: usize = 0;
pub const UNK_ID: usize = 1;
pub const CLS_ID: usize = 2;
pub const SEP_ID: usize = 3;
const SPECIALS: [&str; 4] = ["[PAD]", "[UNK]", "[CLS]", "[SEP]"];

/// A token with its byte span in the source text.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub id: usize,
    pub start: usize,
    pub end: usize,
}

pub trait Tokenizer: Send + Sync {
    /// Stable identifier; windows, caches and checkpoints record it.
    fn id(&self) -> &str;
    fn vocab_size(&self) -> usize;
    fn encode(&self, text: &str) -> Vec<Token>;
}

/// Splits `text` into lowercased word pieces: maximal alphanumeric runs and
/// single punctuation characters. Returns `(piece, byte_start, byte_end)`.
pub fn split_words(text: &str) -> Vec<(String, usize, usize)> {
    let mut out = Vec::new();
    let mut run_start: Option<usize> = None;
    for (i, ch) in text.char_indices() {
        if ch.is_alphanumeric() {
            if run_start.is_none() {
                run_start = Some(i);
            }
            continue;
        }
        if let Some(s) = run_start.take() {
            out.push((text[s..i].to_lowercase(), s, i));
        }
        if !ch.is_whitespace() {
            let e = i + ch.len_utf8();
            out.push((text[i..e].to_lowercase(), i, e));
        }
    }
    if let Some(s) = run_start {
        out.push((text[s..].to_lowercase(), s, text.len()));
    }
    out
}

/// Lowercased whitespace + punctuation tokenizer with a closed vocabulary.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WordTokenizer {
    id: String,
    vocab: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl WordTokenizer {
    /// Builds the vocabulary from `texts`, keeping words seen at least
    /// `min_count` times, most frequent first, up to `max_vocab` entries
    /// (specials included).
    pub fn fit<'a>(texts: impl IntoIterator<Item = &'a str>, min_count: usize, max_vocab: usize) -> Self {
        let mut counts: HashMap<String, usize> = HashMap::new();
        for t in texts {
            for (w, _, _) in split_words(t) {
                *counts.entry(w).or_default() += 1;
            }
        }
        let mut words: Vec<(String, usize)> = counts
            .into_iter()
            .filter(|(_, c)| *c >= min_count.max(1))
            .collect();
        words.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let mut vocab: Vec<String> = SPECIALS.iter().map(|s| s.to_string()).collect();
        vocab.extend(
            words
                .into_iter()
                .map(|(w, _)| w)
                .take(max_vocab.saturating_sub(SPECIALS.len())),
        );
        Self::from_vocab(vocab)
    }

    pub fn from_vocab(vocab: Vec<String>) -> Self {
        let mut h = Sha256::new();
        for w in &vocab {
            h.update(w.as_bytes());
            h.update([0u8]);
        }
        let digest = hex::encode(h.finalize());
        let mut tok = Self {
            id: format!("word-v1-{}", &digest[..16]),
            vocab,
            index: HashMap::new(),
        };
        tok.rebuild_index();
        tok
    }

    fn rebuild_index(&mut self) {
        self.index = self
            .vocab
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
    }

    pub fn word(&self, id: usize) -> &str {
        &self.vocab[id]
    }

    pub fn lookup(&self, word: &str) -> usize {
        self.index.get(word).copied().unwrap_or(UNK_ID)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_vec(self).expect("tokenizer serializes");
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let mut tok: WordTokenizer =
            serde_json::from_slice(&bytes).map_err(|e| Error::format(path, e.to_string()))?;
        tok.rebuild_index();
        Ok(tok)
    }
}

impl Tokenizer for WordTokenizer {
    fn id(&self) -> &str {
        &self.id
    }

    fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    fn encode(&self, text: &str) -> Vec<Token> {
        split_words(text)
            .into_iter()
            .map(|(w, start, end)| Token {
                id: self.lookup(&w),
                start,
                end,
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_words_and_punctuation_with_offsets() {
        let s = "Bazex ' syndrome (rare).";
        let parts = split_words(s);
        let words: Vec<&str> = parts.iter().map(|p| p.0.as_str()).collect();
        assert_eq!(words, ["bazex", "'", "syndrome", "(", "rare", ")", "."]);
        for (w, a, b) in &parts {
            assert_eq!(&s[*a..*b].to_lowercase(), w);
        }
    }

    #[test]
    fn unknown_words_map_to_unk_and_id_tracks_vocab() {
        let tok = WordTokenizer::fit(["the cat sat", "the dog"], 1, 100);
        assert_eq!(tok.word(PAD_ID), "[PAD]");
        let ids: Vec<usize> = tok.encode("The zebra").iter().map(|t| t.id).collect();
        assert_eq!(ids[0], tok.lookup("the"));
        assert_eq!(ids[1], UNK_ID);
        let other = WordTokenizer::fit(["the cat sat", "the bird"], 1, 100);
        assert_ne!(tok.id(), other.id());
        assert_eq!(tok.id(), WordTokenizer::fit(["the cat sat", "the dog"], 1, 100).id());
    }

    #[test]
    fn vocab_cap_keeps_most_frequent() {
        let tok = WordTokenizer::fit(["a a a b b c"], 1, 6);
        assert_eq!(tok.vocab_size(), 6);
        assert_eq!(tok.lookup("a"), 4);
        assert_eq!(tok.lookup("b"), 5);
        assert_eq!(tok.lookup("c"), UNK_ID);
    }

    #[test]
    fn save_load_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("tok.json");
        let tok = WordTokenizer::fit(["hello world"], 1, 10);
        tok.save(&p).unwrap();
        let back = WordTokenizer::load(&p).unwrap();
        assert_eq!(back.id(), tok.id());
        assert_eq!(back.lookup("world"), tok.lookup("world"));
    }
}

//! Reading-comprehension data: MRQA ingestion, windowing, balancing and the
//! leave-one-out experimental protocol.

mod balance;
mod mrqa;
mod splits;
mod windows;

use serde::{Deserialize, Serialize};

pub use balance::{single_domain_batches, upsample_domains, Batch};
pub use mrqa::{load_mrqa_jsonl, load_mrqa_jsonl_with_report, write_mrqa_jsonl, LoadReport};
pub use splits::{leave_one_out_splits, Combo, LeaveOneOutPlan};
pub use windows::{load_window_cache, make_windows, save_window_cache, WindowCacheMeta, WindowConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
    /// Generated questions without gold answers.
    Synthetic,
}

impl Split {
    pub fn is_labeled(self) -> bool {
        !matches!(self, Split::Synthetic)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
            Split::Synthetic => "synthetic",
        }
    }
}

/// A gold answer occurrence; `start..end` are character (not byte) offsets
/// into the passage, end exclusive.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerSpan {
    pub text: String,
    pub start: usize,
    pub end: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RCExample {
    pub qid: String,
    pub question: String,
    pub passage: String,
    pub domain: String,
    pub answers: Vec<String>,
    pub answer_spans: Vec<AnswerSpan>,
}

/// One tokenized `[CLS] question [SEP] passage-chunk [SEP] [PAD]...` view.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub window_id: String,
    pub qid: String,
    pub domain: String,
    /// Padded to the window length with [`crate::tokenizer::PAD_ID`].
    pub token_ids: Vec<usize>,
    /// Number of non-padding tokens (a prefix of `token_ids`).
    pub num_tokens: usize,
    /// Token index ranges, end exclusive.
    pub question_span: (usize, usize),
    pub passage_span: (usize, usize),
    /// Byte offsets into the passage of each passage-span token.
    pub passage_offsets: Vec<(usize, usize)>,
    pub start_label: Option<usize>,
    pub end_label: Option<usize>,
}

impl Window {
    pub fn is_labeled(&self) -> bool {
        self.start_label.is_some() && self.end_label.is_some()
    }

    pub fn labels(&self) -> Option<(usize, usize)> {
        Some((self.start_label?, self.end_label?))
    }

    /// Byte range in the passage covered by window tokens `start..=end`,
    /// both of which must lie inside the passage span.
    pub fn byte_range(&self, start: usize, end: usize) -> (usize, usize) {
        let base = self.passage_span.0;
        (
            self.passage_offsets[start - base].0,
            self.passage_offsets[end - base].1,
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainDataset {
    pub name: String,
    pub split: Split,
    pub examples: Vec<RCExample>,
    #[serde(default)]
    pub windows: Vec<Window>,
}

impl DomainDataset {
    pub fn new(name: impl Into<String>, split: Split, examples: Vec<RCExample>) -> Self {
        Self {
            name: name.into(),
            split,
            examples,
            windows: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn example(&self, qid: &str) -> Option<&RCExample> {
        self.examples.iter().find(|e| e.qid == qid)
    }
}

/// Collapses runs of whitespace and trims.
pub fn normalize_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Byte offset of character index `ch` in `s` (`s.len()` when past the end).
pub fn char_to_byte(s: &str, ch: usize) -> usize {
    s.char_indices().nth(ch).map(|(b, _)| b).unwrap_or(s.len())
}

use super::SpanLogits;
use crate::data::{RCExample, Window};
use crate::error::{Error, Result};

pub const DEFAULT_MAX_ANSWER_LEN: usize = 30;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpanChoice {
    pub start: usize,
    pub end: usize,
    pub score: f64,
}

/// Best `(i, j)` inside the passage span with `i <= j < i + max_answer_len`,
/// scored by `start[i] + end[j]`. Ties go to the smaller `i`, then smaller `j`.
pub fn decode_span(logits: &SpanLogits, window: &Window, max_answer_len: usize) -> Result<SpanChoice> {
    if max_answer_len == 0 {
        return Err(Error::InvalidArgument("max_answer_len must be at least 1".into()));
    }
    let (lo, hi) = window.passage_span;
    let hi = hi.min(logits.start.len()).min(logits.end.len());
    if lo >= hi {
        return Err(Error::NoValidSpan(window.window_id.clone()));
    }
    let mut best: Option<SpanChoice> = None;
    for i in lo..hi {
        let last = (i + max_answer_len).min(hi);
        for j in i..last {
            let score = logits.start[i] + logits.end[j];
            if best.map_or(true, |b| score > b.score) {
                best = Some(SpanChoice { start: i, end: j, score });
            }
        }
    }
    Ok(best.expect("non-empty passage span"))
}

/// Answer text for an example from per-window logits: the span of the
/// best-scoring window (earliest window on ties). Empty when no window has a
/// passage span.
pub fn predict_example_text(
    example: &RCExample,
    windows: &[(&Window, SpanLogits)],
    max_answer_len: usize,
) -> String {
    let mut best: Option<(f64, usize, usize)> = None;
    for (w, logits) in windows {
        let Ok(choice) = decode_span(logits, w, max_answer_len) else { continue };
        if best.map_or(true, |b| choice.score > b.0) {
            let (a, b) = w.byte_range(choice.start, choice.end);
            best = Some((choice.score, a, b));
        }
    }
    best.map(|(_, a, b)| example.passage[a..b].to_string())
        .unwrap_or_default()
}

//! Bag-of-tokens F1 in the extractive-QA scorer style.

use std::collections::HashMap;

use crate::error::{Error, Result};

const ARTICLES: [&str; 3] = ["a", "an", "the"];

fn is_punct(c: char) -> bool {
    c.is_ascii_punctuation() || (!c.is_alphanumeric() && !c.is_whitespace())
}

/// Lowercases, splits on whitespace, removes punctuation inside word tokens
/// and drops articles. A token made only of punctuation (a free-standing
/// `'` or `-`) is kept as a token of its own.
pub fn normalize_tokens(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split_whitespace()
        .filter_map(|tok| {
            if tok.chars().all(is_punct) {
                return Some(tok.to_string());
            }
            let stripped: String = tok.chars().filter(|&c| !is_punct(c)).collect();
            (!ARTICLES.contains(&stripped.as_str())).then_some(stripped)
        })
        .collect()
}

/// Harmonic mean of token precision and recall over token multisets.
pub fn token_f1(prediction: &str, gold: &str) -> f64 {
    let pred = normalize_tokens(prediction);
    let gold = normalize_tokens(gold);
    if pred.is_empty() || gold.is_empty() {
        return if pred.is_empty() && gold.is_empty() { 1.0 } else { 0.0 };
    }
    let mut counts: HashMap<&str, isize> = HashMap::new();
    for t in &gold {
        *counts.entry(t).or_default() += 1;
    }
    let mut common = 0usize;
    for t in &pred {
        if let Some(c) = counts.get_mut(t.as_str()) {
            if *c > 0 {
                *c -= 1;
                common += 1;
            }
        }
    }
    if common == 0 {
        return 0.0;
    }
    let p = common as f64 / pred.len() as f64;
    let r = common as f64 / gold.len() as f64;
    2.0 * p * r / (p + r)
}

/// Best [`token_f1`] over all gold answers.
pub fn example_f1(prediction: &str, golds: &[String]) -> Result<f64> {
    if golds.is_empty() {
        return Err(Error::InvalidArgument("example has no gold answers".into()));
    }
    Ok(golds
        .iter()
        .map(|g| token_f1(prediction, g))
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_and_disjoint() {
        assert_eq!(token_f1("the quick brown fox", "The quick brown fox"), 1.0);
        assert_eq!(token_f1("apples and oranges", "quick brown fox"), 0.0);
    }

    #[test]
    fn free_standing_apostrophe_counts_as_a_token() {
        let f = token_f1("Bazex ' syndrome", "Bazex syndrome");
        assert!((f - 0.8).abs() < 1e-12, "{f}");
    }

    #[test]
    fn trailing_punctuation_and_articles_are_ignored() {
        assert_eq!(token_f1("Janet.", "Janet"), 1.0);
        assert_eq!(token_f1("the DC Universe", "DC Universe"), 1.0);
    }

    #[test]
    fn empty_cases() {
        assert_eq!(token_f1("", ""), 1.0);
        assert_eq!(token_f1("the", "an"), 1.0);
        assert_eq!(token_f1("", "x"), 0.0);
        assert_eq!(token_f1("x", ""), 0.0);
    }

    #[test]
    fn example_f1_takes_max_over_golds() {
        let golds = vec!["Janet.".to_string(), "Janet".to_string()];
        assert_eq!(example_f1("Janet", &golds).unwrap(), 1.0);
        let single = vec!["Janet Stewart".to_string()];
        assert_eq!(example_f1("Janet", &single).unwrap(), token_f1("Janet", "Janet Stewart"));
        assert_eq!(example_f1("Dr. Cross", &golds).unwrap(), 0.0);
        assert!(example_f1("x", &[]).is_err());
    }
}

use std::collections::{BTreeMap, HashMap};

use super::f1::example_f1;
use super::io::ScoreRecord;
use crate::data::{DomainDataset, Window};
use crate::error::{Error, Result};
use crate::model::{predict_example_text, span_logits, ParameterSet};

/// qid → predicted answer text for every example of `ds`.
pub fn predict_dataset(params: &ParameterSet, ds: &DomainDataset, max_answer_len: usize) -> Result<BTreeMap<String, String>> {
    let mut by_qid: HashMap<&str, Vec<&Window>> = HashMap::new();
    for w in &ds.windows {
        by_qid.entry(w.qid.as_str()).or_default().push(w);
    }
    let mut out = BTreeMap::new();
    for ex in &ds.examples {
        let mut scored = Vec::new();
        for &w in by_qid.get(ex.qid.as_str()).map(Vec::as_slice).unwrap_or_default() {
            scored.push((w, span_logits(params, w)?));
        }
        out.insert(ex.qid.clone(), predict_example_text(ex, &scored, max_answer_len));
    }
    Ok(out)
}

/// Per-example F1 in example order.
pub fn score_predictions(ds: &DomainDataset, preds: &BTreeMap<String, String>) -> Result<Vec<ScoreRecord>> {
    ds.examples
        .iter()
        .map(|ex| {
            let p = preds
                .get(&ex.qid)
                .ok_or_else(|| Error::InvalidArgument(format!("no prediction for {}", ex.qid)))?;
            Ok(ScoreRecord {
                qid: ex.qid.clone(),
                dataset: ds.name.clone(),
                f1: example_f1(p, &ex.answers)?,
            })
        })
        .collect()
}

pub fn score_dataset(params: &ParameterSet, ds: &DomainDataset, max_answer_len: usize) -> Result<Vec<ScoreRecord>> {
    score_predictions(ds, &predict_dataset(params, ds, max_answer_len)?)
}

/// Dataset → mean F1.
pub fn dataset_f1(params: &ParameterSet, sets: &[DomainDataset], max_answer_len: usize) -> Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    for ds in sets {
        let s = score_dataset(params, ds, max_answer_len)?;
        if s.is_empty() {
            return Err(Error::EmptyDataset(ds.name.clone()));
        }
        out.insert(ds.name.clone(), s.iter().map(|r| r.f1).sum::<f64>() / s.len() as f64);
    }
    Ok(out)
}

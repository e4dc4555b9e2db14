//! Per-example score dumps and prediction files.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub qid: String,
    pub dataset: String,
    pub f1: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub qid: String,
    pub text: String,
}

/// One JSON object per line, in the given order.
pub fn write_score_dump(path: &Path, records: &[ScoreRecord]) -> Result<()> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("score record serializes"));
        out.push('\n');
    }
    crate::container::write_if_changed(path, out.as_bytes())?;
    Ok(())
}

pub fn read_score_dump(path: &Path) -> Result<Vec<ScoreRecord>> {
    let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let r = serde_json::from_str(&line).map_err(|e| Error::MalformedLine {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(r);
    }
    Ok(out)
}

/// A JSON object mapping qid to predicted answer text.
pub fn write_predictions(path: &Path, preds: &BTreeMap<String, String>) -> Result<()> {
    let mut s = serde_json::to_string_pretty(preds).expect("predictions serialize");
    s.push('\n');
    crate::container::write_if_changed(path, s.as_bytes())?;
    Ok(())
}

pub fn read_predictions(path: &Path) -> Result<BTreeMap<String, String>> {
    let s = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&s).map_err(|e| Error::format(path, e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dumps_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.jsonl");
        let recs = vec![
            ScoreRecord { qid: "a".into(), dataset: "X".into(), f1: 0.8 },
            ScoreRecord { qid: "b".into(), dataset: "Y".into(), f1: 0.0 },
        ];
        write_score_dump(&p, &recs).unwrap();
        assert_eq!(read_score_dump(&p).unwrap(), recs);
        let preds: BTreeMap<_, _> = [("a".to_string(), "Bazex syndrome".to_string())].into();
        let q = dir.path().join("p.json");
        write_predictions(&q, &preds).unwrap();
        assert_eq!(read_predictions(&q).unwrap(), preds);
    }
}

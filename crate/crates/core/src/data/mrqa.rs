//! MRQA JSON-lines reader and writer.
//!
//! Each line after an optional `{"header": ...}` record holds one context
//! with its questions. MRQA character spans are inclusive at both ends; they
//! are converted to half-open ranges on load and back on write.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;
use log::warn;
use serde::{Deserialize, Serialize};

use super::{normalize_whitespace, AnswerSpan, DomainDataset, RCExample, Split};
use crate::error::{Error, Result};

#[derive(Deserialize)]
struct RawContext {
    context: String,
    qas: Vec<RawQa>,
}

#[derive(Deserialize)]
struct RawQa {
    qid: String,
    question: String,
    #[serde(default)]
    answers: Option<Vec<String>>,
    #[serde(default)]
    detected_answers: Vec<RawDetected>,
}

#[derive(Deserialize)]
struct RawDetected {
    text: String,
    char_spans: Vec<[usize; 2]>,
}

#[derive(Serialize)]
struct OutContext<'a> {
    id: String,
    context: &'a str,
    qas: Vec<OutQa<'a>>,
}

#[derive(Serialize)]
struct OutQa<'a> {
    qid: &'a str,
    question: &'a str,
    answers: &'a [String],
    detected_answers: Vec<OutDetected<'a>>,
}

#[derive(Serialize)]
struct OutDetected<'a> {
    text: &'a str,
    char_spans: Vec<[usize; 2]>,
}

/// Diagnostics gathered while loading.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LoadReport {
    /// Detected answers whose text disagreed with the passage substring at
    /// their offsets; the offsets won.
    pub repaired_spans: usize,
}

fn open(path: &Path) -> Result<Box<dyn BufRead>> {
    let mut f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut magic = [0u8; 2];
    let n = f.read(&mut magic).map_err(|e| Error::io(path, e))?;
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    if n == 2 && magic == [0x1f, 0x8b] {
        Ok(Box::new(BufReader::new(GzDecoder::new(f))))
    } else {
        Ok(Box::new(BufReader::new(f)))
    }
}

pub fn load_mrqa_jsonl(path: &Path, split: Split) -> Result<DomainDataset> {
    load_mrqa_jsonl_with_report(path, split).map(|(ds, _)| ds)
}

pub fn load_mrqa_jsonl_with_report(path: &Path, split: Split) -> Result<(DomainDataset, LoadReport)> {
    let reader = open(path)?;
    let mut name: Option<String> = None;
    let mut examples = Vec::new();
    let mut seen = HashSet::new();
    let mut report = LoadReport::default();
    let malformed = |line: usize, message: String| Error::MalformedLine {
        path: path.to_path_buf(),
        line,
        message,
    };

    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value =
            serde_json::from_str(&line).map_err(|e| malformed(lineno, e.to_string()))?;
        if lineno == 1 {
            if let Some(h) = value.get("header") {
                name = h.get("dataset").and_then(|d| d.as_str()).map(str::to_string);
                continue;
            }
        }
        let raw: RawContext =
            serde_json::from_value(value).map_err(|e| malformed(lineno, e.to_string()))?;
        let domain = name.clone().unwrap_or_else(|| default_name(path));
        let chars: Vec<char> = raw.context.chars().collect();

        for qa in raw.qas {
            let answers = qa.answers.unwrap_or_default();
            if split.is_labeled() && answers.is_empty() {
                return Err(Error::MissingAnswers { qid: qa.qid });
            }
            if !seen.insert(qa.qid.clone()) {
                return Err(Error::DuplicateName(qa.qid));
            }
            let mut spans = Vec::new();
            for det in qa.detected_answers {
                for [s, e] in det.char_spans {
                    if s > e || e >= chars.len() {
                        return Err(malformed(
                            lineno,
                            format!("answer span [{s}, {e}] outside context of {} chars in {}", chars.len(), qa.qid),
                        ));
                    }
                    let actual: String = chars[s..=e].iter().collect();
                    let text = if normalize_whitespace(&actual) != normalize_whitespace(&det.text) {
                        warn!(
                            "{}:{lineno}: {}: detected answer {:?} differs from context text {:?} at [{s}, {e}]; using the offsets",
                            path.display(),
                            qa.qid,
                            det.text,
                            actual
                        );
                        report.repaired_spans += 1;
                        actual
                    } else {
                        det.text.clone()
                    };
                    spans.push(AnswerSpan {
                        text,
                        start: s,
                        end: e + 1,
                    });
                }
            }
            examples.push(RCExample {
                qid: qa.qid,
                question: qa.question,
                passage: raw.context.clone(),
                domain: domain.clone(),
                answers,
                answer_spans: spans,
            });
        }
    }
    let domain = name.unwrap_or_else(|| default_name(path));
    Ok((DomainDataset::new(domain, split, examples), report))
}

fn default_name(path: &Path) -> String {
    let file = path.file_name().and_then(|f| f.to_str()).unwrap_or("dataset");
    file.split('.').next().unwrap_or(file).to_string()
}

/// Writes `ds` in MRQA layout, grouping consecutive examples that share a
/// passage into one context line. `.gz` paths are gzip-compressed.
pub fn write_mrqa_jsonl(path: &Path, ds: &DomainDataset) -> Result<()> {
    let mut buf = Vec::new();
    let header = serde_json::json!({"header": {"dataset": ds.name, "split": ds.split.as_str()}});
    writeln!(buf, "{header}").unwrap();
    let mut i = 0;
    let mut ctx_no = 0;
    while i < ds.examples.len() {
        let passage = &ds.examples[i].passage;
        let mut j = i;
        while j < ds.examples.len() && &ds.examples[j].passage == passage {
            j += 1;
        }
        let qas = ds.examples[i..j]
            .iter()
            .map(|ex| OutQa {
                qid: &ex.qid,
                question: &ex.question,
                answers: &ex.answers,
                detected_answers: ex
                    .answer_spans
                    .iter()
                    .map(|s| OutDetected {
                        text: &s.text,
                        char_spans: vec![[s.start, s.end - 1]],
                    })
                    .collect(),
            })
            .collect();
        let line = OutContext {
            id: format!("{}-{ctx_no}", ds.name),
            context: passage,
            qas,
        };
        serde_json::to_writer(&mut buf, &line).expect("context serializes");
        buf.push(b'\n');
        ctx_no += 1;
        i = j;
    }
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    if path.extension().is_some_and(|e| e == "gz") {
        let mut enc = GzEncoder::new(file, Compression::default());
        enc.write_all(&buf).map_err(|e| Error::io(path, e))?;
        enc.finish().map_err(|e| Error::io(path, e))?;
    } else {
        let mut file = file;
        file.write_all(&buf).map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

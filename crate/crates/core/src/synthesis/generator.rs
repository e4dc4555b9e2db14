//! Per-domain question generators.
//!
//! The bundled backend is a template sampler: it learns which question words
//! are fixed template words (frequent across the domain's questions) and which
//! are slots, plus a filler distribution over slot words. Generation samples a
//! template, then fills each slot from the passage's words, one token at a
//! time, through the top-k / top-p filter.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::sampler::sample_top_k_top_p;
use crate::data::{write_mrqa_jsonl, DomainDataset, RCExample, Split};
use crate::error::{Error, Result};
use crate::tokenizer::split_words;

const SLOT: &str = "\u{0}";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub top_p: f64,
    pub top_k: usize,
    pub questions_per_passage: usize,
    pub total_questions: usize,
    pub seed: u64,
    pub source_domain: String,
}

impl GeneratorConfig {
    pub fn new(source_domain: impl Into<String>) -> Self {
        Self {
            top_p: 0.95,
            top_k: 10,
            questions_per_passage: 1,
            total_questions: 2000,
            seed: 0,
            source_domain: source_domain.into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return Err(Error::InvalidArgument(format!("top_p must lie in (0, 1], got {}", self.top_p)));
        }
        if self.top_k == 0 || self.questions_per_passage == 0 {
            return Err(Error::InvalidArgument("top_k and questions_per_passage must be at least 1".into()));
        }
        Ok(())
    }

    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(&Sha256::digest(bytes)[..8])
    }
}

/// Produces one question for a passage.
pub trait QuestionGenerator {
    fn id(&self) -> String;
    fn domain(&self) -> &str;
    fn generate(&self, passage: &str, cfg: &GeneratorConfig, rng: &mut ChaCha8Rng) -> Result<String>;
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TemplateGenerator {
    pub domain: String,
    /// Question token sequences with slot markers, and their counts, sorted.
    pub templates: Vec<(Vec<String>, usize)>,
    /// Slot-filler word counts.
    pub fillers: BTreeMap<String, usize>,
}

fn is_word(w: &str) -> bool {
    w.chars().all(char::is_alphanumeric)
}

/// Fits the template backend on one labeled domain.
pub fn fit_generator(train: &DomainDataset) -> Result<TemplateGenerator> {
    if train.examples.is_empty() {
        return Err(Error::EmptyDataset(train.name.clone()));
    }
    if !train.split.is_labeled() {
        return Err(Error::InvalidArgument(format!("{} is not a labeled training set", train.name)));
    }
    let questions: Vec<Vec<String>> = train
        .examples
        .iter()
        .map(|e| split_words(&e.question).into_iter().map(|t| t.0).collect())
        .collect();
    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for q in &questions {
        for w in q.iter().map(String::as_str).collect::<BTreeSet<_>>() {
            *df.entry(w).or_default() += 1;
        }
    }
    let n = questions.len();
    let threshold = if n == 1 { 1 } else { (n as f64 * 0.05).ceil().max(2.0) as usize };
    let mut templates: BTreeMap<Vec<String>, usize> = BTreeMap::new();
    let mut fillers: BTreeMap<String, usize> = BTreeMap::new();
    for (q, ex) in questions.iter().zip(&train.examples) {
        let passage: BTreeSet<String> = split_words(&ex.passage).into_iter().map(|t| t.0).collect();
        let mut t = Vec::with_capacity(q.len());
        for w in q {
            let slot = is_word(w) && df[w.as_str()] < threshold && passage.contains(w);
            if slot {
                *fillers.entry(w.clone()).or_default() += 1;
                t.push(SLOT.to_string());
            } else {
                t.push(w.clone());
            }
        }
        *templates.entry(t).or_default() += 1;
    }
    Ok(TemplateGenerator {
        domain: train.name.clone(),
        templates: templates.into_iter().collect(),
        fillers,
    })
}

impl TemplateGenerator {
    /// First token of every template.
    pub fn prefixes(&self) -> BTreeSet<String> {
        self.templates.iter().filter_map(|(t, _)| t.first().cloned()).collect()
    }
}

impl QuestionGenerator for TemplateGenerator {
    fn id(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("generator serializes");
        format!("template-v1-{}", hex::encode(&Sha256::digest(bytes)[..8]))
    }

    fn domain(&self) -> &str {
        &self.domain
    }

    fn generate(&self, passage: &str, cfg: &GeneratorConfig, rng: &mut ChaCha8Rng) -> Result<String> {
        let templates: Vec<(&Vec<String>, usize)> = self.templates.iter().map(|(t, c)| (t, *c)).collect();
        let weights: Vec<f64> = templates.iter().map(|(_, c)| *c as f64).collect();
        let template = templates[sample_top_k_top_p(&weights, cfg.top_k, cfg.top_p, rng)?].0;

        let candidates: Vec<String> = split_words(passage)
            .into_iter()
            .map(|t| t.0)
            .filter(|w| is_word(w))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let scores: Vec<f64> = candidates
            .iter()
            .map(|w| self.fillers.get(w).copied().unwrap_or(0) as f64 + 0.1)
            .collect();
        let mut out = Vec::with_capacity(template.len());
        for tok in template {
            if tok == SLOT {
                if candidates.is_empty() {
                    continue;
                }
                out.push(candidates[sample_top_k_top_p(&scores, cfg.top_k, cfg.top_p, rng)?].clone());
            } else {
                out.push(tok.clone());
            }
        }
        Ok(out.join(" "))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub generator_id: String,
    pub config_hash: String,
    pub config: GeneratorConfig,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticQuestionSet {
    /// Answer-free examples (split `synthetic`).
    pub dataset: DomainDataset,
    pub provenance: Provenance,
}

/// Emits exactly `total_questions` questions, `questions_per_passage` at a
/// time, cycling through the passages in order.
pub fn generate_questions(
    generator: &dyn QuestionGenerator,
    passages: &[String],
    cfg: &GeneratorConfig,
) -> Result<SyntheticQuestionSet> {
    cfg.validate()?;
    if passages.is_empty() {
        return Err(Error::EmptyDataset(format!("no passages to generate questions for in {}", cfg.source_domain)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut examples = Vec::with_capacity(cfg.total_questions);
    for i in 0..cfg.total_questions {
        let passage = &passages[(i / cfg.questions_per_passage) % passages.len()];
        let question = generator.generate(passage, cfg, &mut rng)?;
        examples.push(RCExample {
            qid: format!("{}-syn-{i}", cfg.source_domain),
            question,
            passage: passage.clone(),
            domain: cfg.source_domain.clone(),
            answers: Vec::new(),
            answer_spans: Vec::new(),
        });
    }
    Ok(SyntheticQuestionSet {
        dataset: DomainDataset::new(cfg.source_domain.clone(), Split::Synthetic, examples),
        provenance: Provenance {
            generator_id: generator.id(),
            config_hash: cfg.hash(),
            config: cfg.clone(),
        },
    })
}

/// Distinct passages of a dataset in first-seen order.
pub fn unique_passages(ds: &DomainDataset) -> Vec<String> {
    let mut seen = BTreeSet::new();
    ds.examples
        .iter()
        .filter(|e| seen.insert(e.passage.as_str()))
        .map(|e| e.passage.clone())
        .collect()
}

pub fn provenance_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".provenance.json");
    PathBuf::from(s)
}

impl SyntheticQuestionSet {
    /// MRQA JSON-lines with empty answer lists, plus a provenance sidecar.
    pub fn save(&self, path: &Path) -> Result<()> {
        write_mrqa_jsonl(path, &self.dataset)?;
        let mut side = serde_json::to_string_pretty(&self.provenance).expect("provenance serializes");
        side.push('\n');
        crate::container::write_if_changed(&provenance_path(path), side.as_bytes())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::AnswerSpan;

    fn ex(qid: &str, q: &str, passage: &str, answer: &str) -> RCExample {
        let b = passage.find(answer).unwrap();
        let start = passage[..b].chars().count();
        RCExample {
            qid: qid.into(),
            question: q.into(),
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

    fn domain(name: &str, prefix: &str, n: usize) -> DomainDataset {
        let examples = (0..n)
            .map(|i| {
                let e = format!("ent{i}");
                let v = format!("val{i}");
                ex(
                    &format!("{name}{i}"),
                    &format!("{prefix} is the capital of {e} ?"),
                    &format!("the capital of {e} is {v} . nothing else ."),
                    &v,
                )
            })
            .collect();
        DomainDataset::new(name, Split::Train, examples)
    }

    #[test]
    fn slots_and_templates() {
        let g = fit_generator(&domain("A", "what", 40)).unwrap();
        assert_eq!(g.templates.len(), 1);
        let t = &g.templates[0].0;
        assert_eq!(t.iter().filter(|w| *w == SLOT).count(), 1);
        assert_eq!(t[0], "what");
        assert_eq!(g.fillers.len(), 40);
    }

    #[test]
    fn disjoint_prefix_domains_stay_disjoint() {
        let a = fit_generator(&domain("A", "what", 30)).unwrap();
        let b = fit_generator(&domain("B", "which", 30)).unwrap();
        let passages = unique_passages(&domain("A", "what", 30));
        let mut cfg = GeneratorConfig::new("A");
        cfg.total_questions = 50;
        let qa = generate_questions(&a, &passages, &cfg).unwrap();
        cfg.source_domain = "B".into();
        let qb = generate_questions(&b, &passages, &cfg).unwrap();
        let first = |s: &SyntheticQuestionSet| -> BTreeSet<String> {
            s.dataset
                .examples
                .iter()
                .map(|e| e.question.split(' ').next().unwrap().to_string())
                .collect()
        };
        assert!(first(&qa).is_disjoint(&first(&qb)));
        assert_eq!(first(&qa), a.prefixes());
    }

    #[test]
    fn one_example_domain() {
        let g = fit_generator(&domain("A", "what", 1)).unwrap();
        let cfg = GeneratorConfig::new("A");
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let q = g.generate("anything at all", &cfg, &mut rng).unwrap();
        assert_eq!(q, "what is the capital of ent0 ?");
    }

    #[test]
    fn round_robin_count_and_empty_answers() {
        let g = fit_generator(&domain("A", "what", 20)).unwrap();
        let passages = unique_passages(&domain("A", "what", 3));
        let mut cfg = GeneratorConfig::new("A");
        cfg.total_questions = 7;
        let s = generate_questions(&g, &passages, &cfg).unwrap();
        assert_eq!(s.dataset.examples.len(), 7);
        assert_eq!(s.dataset.split, Split::Synthetic);
        for (i, e) in s.dataset.examples.iter().enumerate() {
            assert_eq!(e.passage, passages[i % 3]);
            assert!(e.answers.is_empty() && e.answer_spans.is_empty());
            assert!(!e.question.is_empty());
        }
        assert_eq!(generate_questions(&g, &passages, &cfg).unwrap(), s);
        assert!(generate_questions(&g, &[], &cfg).is_err());
    }

    #[test]
    fn greedy_fill_picks_the_most_frequent_filler() {
        let g = fit_generator(&domain("A", "what", 40)).unwrap();
        let mut cfg = GeneratorConfig::new("A");
        cfg.top_k = 1;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let q1 = g.generate("the capital of ent7 is val7 .", &cfg, &mut rng).unwrap();
        let q2 = g.generate("the capital of ent7 is val7 .", &cfg, &mut rng).unwrap();
        assert_eq!(q1, "what is the capital of ent7 ?");
        assert_eq!(q1, q2);
    }

    #[test]
    fn save_writes_answer_free_mrqa_and_sidecar() {
        let g = fit_generator(&domain("A", "what", 20)).unwrap();
        let passages = unique_passages(&domain("A", "what", 3));
        let mut cfg = GeneratorConfig::new("A");
        cfg.total_questions = 4;
        let s = generate_questions(&g, &passages, &cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("A.synthetic.jsonl");
        s.save(&p).unwrap();
        let back = crate::data::load_mrqa_jsonl(&p, Split::Synthetic).unwrap();
        assert_eq!(back.examples.len(), 4);
        assert!(back.examples.iter().all(|e| e.answers.is_empty()));
        let side: Provenance =
            serde_json::from_str(&std::fs::read_to_string(provenance_path(&p)).unwrap()).unwrap();
        assert_eq!(side, s.provenance);
    }
}

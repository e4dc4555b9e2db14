//! Synthetic reading-comprehension domains with controlled surface-form shift.
//!
//! Every passage states a few (entity, relation, value) facts among filler
//! sentences; a question asks for one value. Domains share the underlying
//! facts but differ in how statements and questions are phrased and in their
//! filler vocabulary. Held-out target domains recombine source phrasings and
//! swap some connective words for words no source domain uses.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{AnswerSpan, DomainDataset, RCExample, Split};

const SYLLABLES: [&str; 24] = [
    "ka", "lo", "mir", "ta", "ven", "dro", "sa", "pel", "qui", "rho", "bel", "nor", "ti", "gal", "vo", "zen", "ar",
    "mu", "sel", "ko", "fa", "dun", "ri", "eth",
];

/// Statement and question phrasings, indexed `[relation][variant]`; `{e}` is
/// the entity and `{v}` the value.
const STATEMENTS: [[&str; 3]; 5] = [
    [
        "the capital of {e} is {v} .",
        "officials in {v} , the capital of {e} , spoke today .",
        "{e} capital city : {v} .",
    ],
    [
        "{e} is ruled by {v} .",
        "{v} , who rules {e} , gave a speech .",
        "{e} ruler : {v} .",
    ],
    [
        "the longest river in {e} is the {v} .",
        "the {v} river , which crosses {e} , flooded again .",
        "{e} main river : {v} .",
    ],
    [
        "{e} was founded by {v} .",
        "{v} , founder of {e} , was remembered .",
        "{e} founder : {v} .",
    ],
    [
        "people in {e} speak {v} .",
        "speakers of {v} in {e} celebrated the holiday .",
        "{e} language : {v} .",
    ],
];

const QUESTIONS: [[&str; 3]; 5] = [
    [
        "what is the capital of {e} ?",
        "which city is the capital of {e} ?",
        "{e} capital city",
    ],
    ["who rules {e} ?", "which leader rules {e} ?", "{e} ruler"],
    [
        "what is the longest river in {e} ?",
        "which river crosses {e} ?",
        "{e} main river",
    ],
    ["who founded {e} ?", "who was the founder of {e} ?", "{e} founder"],
    [
        "what language do people in {e} speak ?",
        "which language is spoken in {e} ?",
        "{e} language",
    ],
];

/// Source words replaced in target domains, and their unseen replacements.
const SUBSTITUTIONS: [(&str, &str); 10] = [
    ("capital", "seat"),
    ("rules", "governs"),
    ("ruled", "governed"),
    ("longest", "widest"),
    ("founded", "established"),
    ("founder", "creator"),
    ("speak", "use"),
    ("city", "town"),
    ("crosses", "traverses"),
    ("people", "residents"),
];

const FILLERS: [[&str; 10]; 4] = [
    ["history", "museum", "ancient", "records", "scholars", "describe", "period", "empire", "archive", "noted"],
    ["reporters", "market", "weekly", "crowd", "minister", "announced", "budget", "tuesday", "strike", "press"],
    ["quiz", "fact", "trivia", "answer", "list", "points", "round", "score", "category", "bonus"],
    ["tourists", "hotel", "beach", "festival", "travel", "guide", "visitors", "season", "cruise", "ticket"],
];

/// How one domain phrases things.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToyDomainStyle {
    pub name: String,
    pub statement_variant: usize,
    pub question_variant: usize,
    pub filler_set: usize,
    /// Probability of replacing each substitutable word with its unseen synonym.
    pub shift: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ToyCorpusConfig {
    pub train_per_domain: usize,
    pub dev_per_domain: usize,
    pub test_per_domain: usize,
    pub entities_per_passage: usize,
    pub relations_per_entity: usize,
    pub filler_sentences: usize,
    pub seed: u64,
}

impl Default for ToyCorpusConfig {
    fn default() -> Self {
        Self {
            train_per_domain: 200,
            dev_per_domain: 60,
            test_per_domain: 100,
            entities_per_passage: 2,
            relations_per_entity: 2,
            filler_sentences: 2,
            seed: 0,
        }
    }
}

/// Three source styles and two shifted target styles.
pub fn default_styles() -> (Vec<ToyDomainStyle>, Vec<ToyDomainStyle>) {
    let s = |name: &str, st, q, f, shift| ToyDomainStyle {
        name: name.to_string(),
        statement_variant: st,
        question_variant: q,
        filler_set: f,
        shift,
    };
    (
        vec![s("alpha", 0, 0, 0, 0.0), s("beta", 1, 1, 1, 0.0), s("gamma", 2, 2, 2, 0.0)],
        vec![s("delta", 0, 1, 3, 0.3), s("epsilon", 1, 2, 3, 0.5)],
    )
}

#[derive(Clone, Debug, PartialEq)]
pub struct ToyCorpus {
    pub sources: Vec<(DomainDataset, DomainDataset)>,
    pub targets: Vec<DomainDataset>,
}

impl ToyCorpus {
    pub fn train_sets(&self) -> Vec<DomainDataset> {
        self.sources.iter().map(|s| s.0.clone()).collect()
    }

    pub fn dev_sets(&self) -> Vec<DomainDataset> {
        self.sources.iter().map(|s| s.1.clone()).collect()
    }
}

struct Names {
    entities: Vec<String>,
    values: Vec<Vec<String>>,
}

fn names(rng: &mut ChaCha8Rng) -> Names {
    let mut word = |suffix: &str, parts: usize| -> String {
        let mut w: String = (0..parts).map(|_| *SYLLABLES.choose(rng).unwrap()).collect();
        w.push_str(suffix);
        w
    };
    let unique = |n: usize, f: &mut dyn FnMut() -> String| -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        while out.len() < n {
            let w = f();
            if !out.contains(&w) {
                out.push(w);
            }
        }
        out
    };
    let entities = unique(60, &mut || word("ia", 2));
    let values = vec![
        unique(40, &mut || word("", 2)),
        unique(40, &mut || format!("{} {}", word("", 1), word("", 2))),
        unique(40, &mut || word("o", 2)),
        unique(40, &mut || format!("{} {}", word("", 2), word("", 1))),
        unique(40, &mut || word("ish", 2)),
    ];
    Names { entities, values }
}

fn shift_words(text: &str, shift: f64, rng: &mut ChaCha8Rng) -> String {
    if shift <= 0.0 {
        return text.to_string();
    }
    text.split(' ')
        .map(|w| match SUBSTITUTIONS.iter().find(|(from, _)| *from == w) {
            Some((_, to)) if rng.gen::<f64>() < shift => (*to).to_string(),
            _ => w.to_string(),
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Byte offset of `needle` in `s` as a run of whole space-separated words.
fn word_offset(s: &str, needle: &str) -> Option<usize> {
    s.match_indices(needle).map(|(i, _)| i).find(|&i| {
        let end = i + needle.len();
        (i == 0 || s.as_bytes()[i - 1] == b' ') && (end == s.len() || s.as_bytes()[end] == b' ')
    })
}

fn example(
    style: &ToyDomainStyle,
    qid: String,
    names: &Names,
    cfg: &ToyCorpusConfig,
    rng: &mut ChaCha8Rng,
) -> RCExample {
    let entities: Vec<&String> = names.entities.choose_multiple(rng, cfg.entities_per_passage).collect();
    let mut facts: Vec<(usize, &String, &String)> = Vec::new();
    for e in &entities {
        let mut rels: Vec<usize> = (0..STATEMENTS.len()).collect();
        rels.shuffle(rng);
        for &r in rels.iter().take(cfg.relations_per_entity) {
            let v = loop {
                let v = names.values[r].choose(rng).unwrap();
                if !facts.iter().any(|f| f.2 == v) {
                    break v;
                }
            };
            facts.push((r, e, v));
        }
    }
    let asked = rng.gen_range(0..facts.len());
    let mut sentences: Vec<(Option<usize>, String)> = facts
        .iter()
        .enumerate()
        .map(|(i, (r, e, v))| {
            let t = shift_words(STATEMENTS[*r][style.statement_variant], style.shift, rng);
            (Some(i), t.replace("{e}", e).replace("{v}", v))
        })
        .collect();
    let filler = &FILLERS[style.filler_set];
    for _ in 0..cfg.filler_sentences {
        let n = rng.gen_range(4..8);
        let mut s: Vec<&str> = (0..n).map(|_| *filler.choose(rng).unwrap()).collect();
        s.push(".");
        sentences.push((None, s.join(" ")));
    }
    sentences.shuffle(rng);

    let (r, e, v) = facts[asked];
    let mut passage = String::new();
    let mut span = (0, 0);
    for (idx, s) in &sentences {
        if !passage.is_empty() {
            passage.push(' ');
        }
        if *idx == Some(asked) {
            let at = word_offset(s, v).expect("value in its statement");
            let start = passage.chars().count() + s[..at].chars().count();
            span = (start, start + v.chars().count());
        }
        passage.push_str(s);
    }
    let question = shift_words(QUESTIONS[r][style.question_variant], style.shift, rng).replace("{e}", e);
    RCExample {
        qid,
        question,
        passage,
        domain: style.name.clone(),
        answers: vec![v.clone()],
        answer_spans: vec![AnswerSpan {
            text: v.clone(),
            start: span.0,
            end: span.1,
        }],
    }
}

fn dataset(style: &ToyDomainStyle, split: Split, n: usize, names: &Names, cfg: &ToyCorpusConfig, rng: &mut ChaCha8Rng) -> DomainDataset {
    let examples = (0..n)
        .map(|i| example(style, format!("{}-{}-{i}", style.name, split.as_str()), names, cfg, rng))
        .collect();
    DomainDataset::new(style.name.clone(), split, examples)
}

/// Builds the corpus for the given styles; deterministic in `cfg.seed`.
pub fn toy_corpus_with(cfg: &ToyCorpusConfig, sources: &[ToyDomainStyle], targets: &[ToyDomainStyle]) -> ToyCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let names = names(&mut rng);
    let sources = sources
        .iter()
        .map(|s| {
            let train = dataset(s, Split::Train, cfg.train_per_domain, &names, cfg, &mut rng);
            let dev = dataset(s, Split::Dev, cfg.dev_per_domain, &names, cfg, &mut rng);
            (train, dev)
        })
        .collect();
    let targets = targets
        .iter()
        .map(|s| dataset(s, Split::Test, cfg.test_per_domain, &names, cfg, &mut rng))
        .collect();
    ToyCorpus { sources, targets }
}

pub fn toy_corpus(cfg: &ToyCorpusConfig) -> ToyCorpus {
    let (s, t) = default_styles();
    toy_corpus_with(cfg, &s, &t)
}

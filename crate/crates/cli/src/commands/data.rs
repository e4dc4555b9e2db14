//! prepare, generate and toy-data.

use std::path::Path;

use anyhow::{Context, Result};
use dgkd_core::container::write_if_changed;
use dgkd_core::data::{leave_one_out_splits, load_mrqa_jsonl, make_windows, save_window_cache, write_mrqa_jsonl, DomainDataset, Split, WindowConfig};
use dgkd_core::synthesis::{fit_generator, generate_questions, unique_passages};
use dgkd_core::tokenizer::{Tokenizer, WordTokenizer};
use dgkd_core::toy::{toy_corpus, ToyCorpusConfig};
use log::info;

use crate::artifacts::{self, write_json};
use crate::config::ExperimentConfig;
use crate::layout::Layout;

/// Files written and left untouched by one command.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct WriteCount {
    pub written: usize,
    pub unchanged: usize,
}

impl WriteCount {
    fn note(&mut self, changed: bool) {
        if changed {
            self.written += 1;
        } else {
            self.unchanged += 1;
        }
    }
}

fn window_config(cfg: &ExperimentConfig, split: Split) -> WindowConfig {
    WindowConfig {
        stride: cfg.stride(),
        ..WindowConfig::for_split(split, cfg.windows.max_len)
    }
}

fn load(path: &Path, split: Split, name: &str) -> Result<DomainDataset> {
    let mut ds = load_mrqa_jsonl(path, split)?;
    ds.name = name.to_string();
    for e in &mut ds.examples {
        e.domain = name.to_string();
    }
    Ok(ds)
}

/// Tokenizer, window caches for every split, and the leave-one-out plan.
/// Unchanged inputs rewrite nothing.
pub fn cmd_prepare(cfg: &ExperimentConfig) -> Result<WriteCount> {
    let layout = Layout::new(&cfg.output_dir);
    let mut count = WriteCount::default();
    let train: Vec<DomainDataset> = cfg
        .sources
        .iter()
        .map(|s| load(&s.train, Split::Train, &s.name))
        .collect::<Result<_>>()?;
    let dev: Vec<DomainDataset> = cfg.sources.iter().map(|s| load(&s.dev, Split::Dev, &s.name)).collect::<Result<_>>()?;
    let test: Vec<DomainDataset> = cfg
        .targets
        .iter()
        .map(|t| load(&t.test, Split::Test, &t.name))
        .collect::<Result<_>>()?;

    let texts = train.iter().flat_map(|d| d.examples.iter().flat_map(|e| [e.question.as_str(), e.passage.as_str()]));
    let tokenizer = WordTokenizer::fit(texts, cfg.tokenizer.min_count, cfg.tokenizer.max_vocab);
    let bytes = serde_json::to_vec(&tokenizer)?;
    count.note(write_if_changed(&layout.tokenizer(), &bytes)?);
    info!("tokenizer {} with {} entries", tokenizer.id(), tokenizer.vocab_size());

    for (split, sets) in [(Split::Train, &train), (Split::Dev, &dev), (Split::Test, &test)] {
        let wc = window_config(cfg, split);
        for ds in sets {
            let windowed = make_windows(ds, &tokenizer, &wc).with_context(|| format!("windowing {} {}", ds.name, split.as_str()))?;
            info!("{} {}: {} examples, {} windows", ds.name, split.as_str(), windowed.len(), windowed.windows.len());
            count.note(save_window_cache(&layout.windows(split, &ds.name), &windowed, tokenizer.id(), &wc)?);
        }
    }

    let plan = leave_one_out_splits(&cfg.source_names())?;
    count.note(write_json(&layout.plan(), &plan)?);
    for c in &plan.combos {
        count.note(write_json(&layout.combo(&c.id), c)?);
    }
    Ok(count)
}

/// Synthetic questions over each source's training passages, saved as
/// MRQA files and as window caches.
pub fn cmd_generate(cfg: &ExperimentConfig) -> Result<WriteCount> {
    let layout = Layout::new(&cfg.output_dir);
    let tokenizer = artifacts::tokenizer(&layout)?;
    let train = artifacts::windows(&layout, Split::Train, &cfg.source_names(), tokenizer.id())?;
    let wc = window_config(cfg, Split::Synthetic);
    let mut count = WriteCount::default();
    for ds in &train {
        let generator = fit_generator(ds)?;
        let gcfg = cfg.generator.for_domain(&ds.name);
        let set = generate_questions(&generator, &unique_passages(ds), &gcfg)?;
        set.save(&layout.synthetic(&ds.name))?;
        let windowed = make_windows(&set.dataset, &tokenizer, &wc)?;
        info!("{}: {} synthetic questions, {} windows", ds.name, set.dataset.len(), windowed.windows.len());
        count.note(save_window_cache(&layout.windows(Split::Synthetic, &ds.name), &windowed, tokenizer.id(), &wc)?);
    }
    Ok(count)
}

/// Writes the toy corpus as gzipped MRQA files: `<name>-train`, `<name>-dev`
/// for the sources and `<name>-test` for the targets.
pub fn cmd_toy_data(out: &Path, toy: &ToyCorpusConfig) -> Result<Vec<std::path::PathBuf>> {
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let corpus = toy_corpus(toy);
    let mut written = Vec::new();
    let mut emit = |ds: &DomainDataset, split: &str| -> Result<()> {
        let p = out.join(format!("{}-{split}.jsonl.gz", ds.name));
        write_mrqa_jsonl(&p, ds)?;
        written.push(p);
        Ok(())
    };
    for (train, dev) in &corpus.sources {
        emit(train, "train")?;
        emit(dev, "dev")?;
    }
    for t in &corpus.targets {
        emit(t, "test")?;
    }
    Ok(written)
}

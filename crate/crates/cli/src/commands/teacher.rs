//! train-teacher (and companion models) and cache-logits.

use anyhow::{bail, Result};
use dgkd_core::data::{Combo, Split};
use dgkd_core::model::Checkpoint;
use dgkd_core::tokenizer::{Tokenizer, WordTokenizer};
use dgkd_core::trainers::{cache_teacher_logits, train_erm, TrainInputs};
use log::info;

use crate::artifacts;
use crate::config::ExperimentConfig;
use crate::layout::Layout;

fn combos(layout: &Layout, only: Option<&str>) -> Result<Vec<Combo>> {
    match only {
        Some(id) => Ok(vec![artifacts::combo(layout, id)?]),
        None => Ok(artifacts::plan(layout)?.combos),
    }
}

fn tokenizer_and_layout(cfg: &ExperimentConfig) -> Result<(Layout, WordTokenizer)> {
    let layout = Layout::new(&cfg.output_dir);
    let tok = artifacts::tokenizer(&layout)?;
    Ok((layout, tok))
}

/// One teacher per combination, trained with ERM on its member sources and
/// selected on their dev sets.
pub fn cmd_train_teacher(cfg: &ExperimentConfig, combo: Option<&str>) -> Result<Vec<String>> {
    let (layout, tok) = tokenizer_and_layout(cfg)?;
    let model = cfg.teacher.encoder.encoder(tok.vocab_size(), cfg.windows.max_len);
    let tc = cfg.teacher_train_config();
    let mut hashes = Vec::new();
    for c in combos(&layout, combo)? {
        let train = artifacts::windows(&layout, Split::Train, &c.members, tok.id())?;
        let dev = artifacts::windows(&layout, Split::Dev, &c.members, tok.id())?;
        let inputs = TrainInputs {
            train: &train,
            dev: &dev,
            tokenizer_id: tok.id(),
            combo: &c.id,
        };
        let out = train_erm(&tc, &model, inputs)?;
        info!("teacher {}: dev macro-F1 {:.4} at epoch {}", c.id, out.dev_scores[&out.best_epoch], out.best_epoch);
        out.checkpoint.save(&layout.teacher(&c.id))?;
        hashes.push(out.checkpoint.hash());
    }
    Ok(hashes)
}

/// Single-source ERM models with the student's shape, one per source.
pub fn cmd_train_companions(cfg: &ExperimentConfig) -> Result<()> {
    let (layout, tok) = tokenizer_and_layout(cfg)?;
    let model = cfg.student.encoder(tok.vocab_size(), cfg.windows.max_len);
    let tc = cfg.companion_train_config();
    for name in cfg.source_names() {
        let one = std::slice::from_ref(&name);
        let train = artifacts::windows(&layout, Split::Train, one, tok.id())?;
        let dev = artifacts::windows(&layout, Split::Dev, one, tok.id())?;
        let inputs = TrainInputs {
            train: &train,
            dev: &dev,
            tokenizer_id: tok.id(),
            combo: &name,
        };
        let out = train_erm(&tc, &model, inputs)?;
        info!("companion {name}: dev F1 {:.4}", out.dev_scores[&out.best_epoch]);
        out.checkpoint.save(&layout.companion(&name))?;
    }
    Ok(())
}

/// Teacher logits for the combination's gold training windows and, when
/// generated, its synthetic windows.
pub fn cmd_cache_logits(cfg: &ExperimentConfig, combo: Option<&str>) -> Result<()> {
    let (layout, tok) = tokenizer_and_layout(cfg)?;
    for c in combos(&layout, combo)? {
        let teacher: Checkpoint = artifacts::teacher(&layout, &c.id)?;
        if teacher.meta.combo != c.id {
            bail!("{} belongs to combo {}, not {}", layout.teacher(&c.id).display(), teacher.meta.combo, c.id);
        }
        let train = artifacts::windows(&layout, Split::Train, &c.members, tok.id())?;
        let have_synthetic = c.members.iter().all(|m| layout.windows(Split::Synthetic, m).exists());
        let synthetic = if have_synthetic {
            artifacts::windows(&layout, Split::Synthetic, &c.members, tok.id())?
        } else {
            log::warn!("no synthetic questions for {}; caching gold windows only (run `dgkd generate` for kd_aug)", c.id);
            Vec::new()
        };
        let windows = train.iter().chain(&synthetic).flat_map(|d| &d.windows);
        let cache = cache_teacher_logits(&teacher, windows, tok.id())?;
        let changed = cache.save(&layout.logits(&c.id))?;
        info!("{}: {} cached windows{}", c.id, cache.len(), if changed { "" } else { " (unchanged)" });
    }
    Ok(())
}

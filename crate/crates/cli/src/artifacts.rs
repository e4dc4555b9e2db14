//! Loading prerequisite artifacts with errors that name the producing command.

use std::path::Path;

use anyhow::{bail, Context, Result};
use dgkd_core::container::write_if_changed;
use dgkd_core::data::{load_window_cache, Combo, DomainDataset, LeaveOneOutPlan, Split};
use dgkd_core::model::Checkpoint;
use dgkd_core::tokenizer::WordTokenizer;
use dgkd_core::trainers::{CompanionBank, TeacherLogitCache};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::layout::Layout;

/// Fails with a hint to run `producer` when `path` is absent.
pub fn require(path: &Path, producer: &str) -> Result<()> {
    if !path.exists() {
        bail!("missing {}; run `dgkd {producer}` first", path.display());
    }
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<bool> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(write_if_changed(path, s.as_bytes())?)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let s = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&s).with_context(|| format!("parsing {}", path.display()))
}

pub fn tokenizer(layout: &Layout) -> Result<WordTokenizer> {
    let p = layout.tokenizer();
    require(&p, "prepare")?;
    Ok(WordTokenizer::load(&p)?)
}

pub fn plan(layout: &Layout) -> Result<LeaveOneOutPlan> {
    let p = layout.plan();
    require(&p, "prepare")?;
    read_json(&p)
}

pub fn combo(layout: &Layout, id: &str) -> Result<Combo> {
    let plan = plan(layout)?;
    match plan.combo(id) {
        Some(c) => Ok(c.clone()),
        None => {
            let ids: Vec<&str> = plan.combos.iter().map(|c| c.id.as_str()).collect();
            bail!("unknown combo {id}; the plan has {}", ids.join(", "))
        }
    }
}

/// Window caches for `names`, checked against the prepared tokenizer.
pub fn windows(layout: &Layout, split: Split, names: &[String], tokenizer_id: &str) -> Result<Vec<DomainDataset>> {
    let producer = if split == Split::Synthetic { "generate" } else { "prepare" };
    names
        .iter()
        .map(|n| {
            let p = layout.windows(split, n);
            require(&p, producer)?;
            let (meta, ds) = load_window_cache(&p)?;
            if meta.tokenizer_id != tokenizer_id {
                bail!(
                    "{} was built with tokenizer {} but the prepared tokenizer is {tokenizer_id}; rerun `dgkd {producer}`",
                    p.display(),
                    meta.tokenizer_id
                );
            }
            Ok(ds)
        })
        .collect()
}

pub fn teacher(layout: &Layout, combo: &str) -> Result<Checkpoint> {
    let p = layout.teacher(combo);
    require(&p, &format!("train-teacher --combo {combo}"))?;
    Ok(Checkpoint::load(&p)?)
}

pub fn logits(layout: &Layout, combo: &str) -> Result<TeacherLogitCache> {
    let p = layout.logits(combo);
    require(&p, &format!("cache-logits --combo {combo}"))?;
    Ok(TeacherLogitCache::load(&p)?)
}

pub fn companions(layout: &Layout, domains: &[String]) -> Result<CompanionBank> {
    let mut models = std::collections::BTreeMap::new();
    for d in domains {
        let p = layout.companion(d);
        require(&p, "train-teacher --companions")?;
        models.insert(d.clone(), Checkpoint::load(&p)?.params);
    }
    Ok(CompanionBank::new(models))
}

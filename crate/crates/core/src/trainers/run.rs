//! Epoch loop, checkpoint selection and the public trainer entry points.

use std::collections::BTreeMap;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adversarial::adversarial_step;
use super::cache::TeacherLogitCache;
use super::config::{Method, TrainConfig};
use super::episodic::{episodic_step, CompanionBank};
use super::losses::Objective;
use super::mldg::mldg_step;
use super::optim::Optimizer;
use super::step::{batch_span_grads, mix};
use crate::data::{single_domain_batches, upsample_domains, Batch, DomainDataset};
use crate::error::{Error, Result};
use crate::eval::{dataset_f1, macro_f1, select_checkpoint};
use crate::model::{Checkpoint, CheckpointMeta, EncoderConfig, ParameterSet, CHECKPOINT_VERSION};

const GOLD_STAGE: u64 = 1;
const SYNTHETIC_STAGE: u64 = 2;

/// One optimizer step in the training log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub stage: String,
    pub epoch: usize,
    pub step: usize,
    pub domain: String,
    pub lr: f64,
    pub losses: BTreeMap<String, f64>,
}

pub fn write_log(path: &Path, log: &[StepRecord]) -> Result<()> {
    let mut out = String::new();
    for r in log {
        out.push_str(&serde_json::to_string(r).expect("log record serializes"));
        out.push('\n');
    }
    crate::container::write_if_changed(path, out.as_bytes())?;
    Ok(())
}

/// Training data for one run.
#[derive(Clone, Copy)]
pub struct TrainInputs<'a> {
    /// Windowed training sets, one per source domain.
    pub train: &'a [DomainDataset],
    /// Windowed in-domain dev sets used for checkpoint selection.
    pub dev: &'a [DomainDataset],
    pub tokenizer_id: &'a str,
    pub combo: &'a str,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub checkpoint: Checkpoint,
    pub best_epoch: usize,
    /// Gold-stage epoch → dev macro-F1.
    pub dev_scores: BTreeMap<usize, f64>,
    pub log: Vec<StepRecord>,
}

#[derive(Clone, Copy)]
enum Kind<'a> {
    Plain,
    Adversarial,
    Episodic(&'a CompanionBank),
    Mldg,
}

struct Stage<'a> {
    name: &'static str,
    tag: u64,
    sets: &'a [DomainDataset],
    epochs: usize,
    objective: Objective<'a>,
    kind: Kind<'a>,
}

fn check_windows(sets: &[DomainDataset], objective: Objective) -> Result<()> {
    if sets.is_empty() || sets.iter().all(|s| s.windows.is_empty()) {
        return Err(Error::EmptyDataset("training data has no windows".into()));
    }
    for w in sets.iter().flat_map(|s| &s.windows) {
        match objective {
            Objective::Gold if !w.is_labeled() => return Err(Error::UnlabeledWindow(w.window_id.clone())),
            Objective::Distill { cache, .. } => {
                cache.get(w)?;
            }
            _ => {}
        }
    }
    Ok(())
}

/// Per-step batches: single-domain batches, or for MLDG one batch from each
/// domain per step.
fn epoch_steps<'a>(sets: &'a [DomainDataset], cfg: &TrainConfig, kind: Kind, seed: u64) -> Vec<Vec<Batch<'a>>> {
    let batches = single_domain_batches(sets, cfg.batch_size, seed);
    match kind {
        Kind::Mldg => {
            let mut by_domain: BTreeMap<&str, Vec<Batch>> = BTreeMap::new();
            for b in batches {
                by_domain.entry(b.domain).or_default().push(b);
            }
            let steps = by_domain.values().map(Vec::len).min().unwrap_or(0);
            let mut queues: Vec<_> = by_domain.into_values().map(Vec::into_iter).collect();
            (0..steps)
                .map(|_| queues.iter_mut().map(|q| q.next().expect("balanced queue")).collect())
                .collect()
        }
        _ => batches.into_iter().map(|b| vec![b]).collect(),
    }
}

fn run_stage(
    cfg: &TrainConfig,
    params: &mut ParameterSet,
    stage: &Stage,
    dev: &[DomainDataset],
    domains: &[String],
    log: &mut Vec<StepRecord>,
) -> Result<BTreeMap<usize, (f64, ParameterSet)>> {
    check_windows(stage.sets, stage.objective)?;
    let stage_seed = mix(cfg.seed, stage.tag);
    let sets = upsample_domains(stage.sets, mix(stage_seed, 0))?;
    let per_epoch = epoch_steps(&sets, cfg, stage.kind, 0).len();
    let mut opt = Optimizer::new(cfg.optimizer.clone(), cfg.learning_rate, per_epoch * stage.epochs, params);
    let mut episode_rng = ChaCha8Rng::seed_from_u64(mix(stage_seed, 0xE9));
    let mut snapshots = BTreeMap::new();
    let mut step = 0usize;
    for epoch in 1..=stage.epochs {
        for batches in epoch_steps(&sets, cfg, stage.kind, mix(stage_seed, 1000 + epoch as u64)) {
            let dropout = Some(mix(stage_seed, (1 << 40) + step as u64));
            let mut losses = BTreeMap::new();
            let batch = &batches[0];
            let grads = match stage.kind {
                Kind::Plain => {
                    let (l, g) = batch_span_grads(params, &batch.windows, stage.objective, dropout)?;
                    losses.insert("span".to_string(), l);
                    g
                }
                Kind::Adversarial => {
                    let label = domains
                        .iter()
                        .position(|d| d == batch.domain)
                        .ok_or_else(|| Error::InvalidArgument(format!("unknown domain {}", batch.domain)))?;
                    let s = adversarial_step(params, &batch.windows, label, stage.objective, cfg.lambda_adv, dropout)?;
                    losses.insert("span".to_string(), s.span_loss);
                    losses.insert("domain".to_string(), s.domain_loss);
                    s.grads
                }
                Kind::Episodic(bank) => {
                    let s = episodic_step(params, bank, batch, stage.objective, cfg.lambda_erm, &mut episode_rng, dropout)?;
                    losses.insert("full".to_string(), s.loss_full);
                    losses.insert("episodic".to_string(), s.loss_episodic);
                    losses.insert("split_layer".to_string(), s.split.split_layer as f64);
                    s.grads
                }
                Kind::Mldg => {
                    let s = mldg_step(
                        params,
                        &batches,
                        stage.objective,
                        cfg.alpha(),
                        cfg.beta,
                        cfg.first_order_mldg,
                        &mut episode_rng,
                        dropout,
                    )?;
                    losses.insert("meta_train".to_string(), s.loss_train);
                    losses.insert("meta_test".to_string(), s.loss_test);
                    s.grads
                }
            };
            let lr = opt.step(params, &grads);
            log.push(StepRecord {
                stage: stage.name.to_string(),
                epoch,
                step,
                domain: match stage.kind {
                    Kind::Mldg => batches.iter().map(|b| b.domain).collect::<Vec<_>>().join("+"),
                    _ => batch.domain.to_string(),
                },
                lr,
                losses,
            });
            step += 1;
        }
        let score = if dev.is_empty() {
            0.0
        } else {
            macro_f1(&dataset_f1(params, dev, cfg.max_answer_len)?)?
        };
        let epoch_losses: Vec<f64> = log
            .iter()
            .filter(|r| r.stage == stage.name && r.epoch == epoch)
            .filter_map(|r| ["span", "full", "meta_train"].iter().find_map(|k| r.losses.get(*k).copied()))
            .collect();
        log::info!(
            "{} epoch {epoch}: mean loss {:.4}, dev macro-F1 {score:.4}",
            stage.name,
            crate::eval::mean(&epoch_losses)
        );
        snapshots.insert(epoch, (score, params.clone()));
    }
    Ok(snapshots)
}

fn source_domains(train: &[DomainDataset]) -> Result<Vec<String>> {
    let names: Vec<String> = train.iter().map(|d| d.name.clone()).collect();
    for (i, n) in names.iter().enumerate() {
        if names[..i].contains(n) {
            return Err(Error::DuplicateName(n.clone()));
        }
    }
    Ok(names)
}

/// Runs an optional synthetic stage then the gold stage, and returns the best
/// gold-stage epoch by dev macro-F1 (earlier epoch on ties).
fn run(
    cfg: &TrainConfig,
    model: &EncoderConfig,
    inputs: TrainInputs,
    objective: Objective,
    kind: Kind,
    synthetic: Option<&[DomainDataset]>,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let domains = source_domains(inputs.train)?;
    let num_domains = if matches!(kind, Kind::Adversarial) {
        if domains.len() < 2 {
            return Err(Error::TooFewDomains {
                needed: 2,
                got: domains.len(),
            });
        }
        domains.len()
    } else {
        0
    };
    let mut params = ParameterSet::init(model, num_domains, cfg.seed)?;
    let mut log = Vec::new();
    if let Some(synthetic) = synthetic {
        if cfg.synthetic_epochs > 0 {
            let stage = Stage {
                name: "synthetic",
                tag: SYNTHETIC_STAGE,
                sets: synthetic,
                epochs: cfg.synthetic_epochs,
                objective,
                kind: Kind::Plain,
            };
            run_stage(cfg, &mut params, &stage, &[], &domains, &mut log)?;
        }
    }
    let stage = Stage {
        name: "gold",
        tag: GOLD_STAGE,
        sets: inputs.train,
        epochs: cfg.epochs,
        objective,
        kind,
    };
    let snapshots = run_stage(cfg, &mut params, &stage, inputs.dev, &domains, &mut log)?;
    let dev_scores: BTreeMap<usize, f64> = snapshots.iter().map(|(&e, (s, _))| (e, *s)).collect();
    let best_epoch = if inputs.dev.is_empty() {
        cfg.epochs
    } else {
        select_checkpoint(&dev_scores).expect("at least one epoch")
    };
    let params = snapshots.into_iter().find(|(e, _)| *e == best_epoch).expect("selected epoch").1 .1;
    let meta = CheckpointMeta {
        version: CHECKPOINT_VERSION,
        config: model.clone(),
        method: cfg.method.to_string(),
        epoch: best_epoch,
        seed: cfg.seed,
        combo: inputs.combo.to_string(),
        tokenizer_id: inputs.tokenizer_id.to_string(),
        domains: if num_domains > 0 { domains } else { Vec::new() },
    };
    Ok(TrainOutcome {
        checkpoint: Checkpoint { meta, params },
        best_epoch,
        dev_scores,
        log,
    })
}

fn distill<'a>(cfg: &TrainConfig, cache: &'a TeacherLogitCache, tokenizer_id: &str) -> Result<Objective<'a>> {
    if cache.tokenizer_id != tokenizer_id {
        return Err(Error::TokenizerMismatch {
            expected: tokenizer_id.to_string(),
            found: cache.tokenizer_id.clone(),
        });
    }
    Ok(Objective::Distill { cache, tau: cfg.tau })
}

fn expect_method(cfg: &TrainConfig, allowed: &[Method]) -> Result<()> {
    if allowed.contains(&cfg.method) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("trainer called with method {}", cfg.method)))
    }
}

/// Cross-entropy on gold spans over balanced single-domain batches.
pub fn train_erm(cfg: &TrainConfig, model: &EncoderConfig, inputs: TrainInputs) -> Result<TrainOutcome> {
    run(cfg, model, inputs, Objective::Gold, Kind::Plain, None)
}

/// Distillation on the gold example stream against cached teacher logits.
pub fn train_kd(cfg: &TrainConfig, model: &EncoderConfig, inputs: TrainInputs, cache: &TeacherLogitCache) -> Result<TrainOutcome> {
    let objective = distill(cfg, cache, inputs.tokenizer_id)?;
    run(cfg, model, inputs, objective, Kind::Plain, None)
}

/// Distillation on synthetic questions, then on gold questions.
pub fn train_kd_augmented(
    cfg: &TrainConfig,
    model: &EncoderConfig,
    inputs: TrainInputs,
    synthetic: &[DomainDataset],
    cache: &TeacherLogitCache,
) -> Result<TrainOutcome> {
    if synthetic.iter().all(|s| s.windows.is_empty()) {
        return Err(Error::EmptyDataset(
            "augmented distillation needs synthetic windows (use kd_gold for gold-only distillation)".into(),
        ));
    }
    let objective = distill(cfg, cache, inputs.tokenizer_id)?;
    run(cfg, model, inputs, objective, Kind::Plain, Some(synthetic))
}

/// Span loss plus a reversed-gradient domain classifier; with a cache the
/// span loss is distillation.
pub fn train_domain_adversarial(
    cfg: &TrainConfig,
    model: &EncoderConfig,
    inputs: TrainInputs,
    cache: Option<&TeacherLogitCache>,
) -> Result<TrainOutcome> {
    let objective = match cache {
        Some(c) => distill(cfg, c, inputs.tokenizer_id)?,
        None => Objective::Gold,
    };
    run(cfg, model, inputs, objective, Kind::Adversarial, None)
}

pub fn train_episodic(
    cfg: &TrainConfig,
    model: &EncoderConfig,
    inputs: TrainInputs,
    companions: &CompanionBank,
    cache: Option<&TeacherLogitCache>,
) -> Result<TrainOutcome> {
    let domains = source_domains(inputs.train)?;
    let probe = ParameterSet::init(model, 0, 0)?;
    companions.check(&domains, &probe)?;
    let objective = match cache {
        Some(c) => distill(cfg, c, inputs.tokenizer_id)?,
        None => Objective::Gold,
    };
    run(cfg, model, inputs, objective, Kind::Episodic(companions), None)
}

pub fn train_mldg(
    cfg: &TrainConfig,
    model: &EncoderConfig,
    inputs: TrainInputs,
    cache: Option<&TeacherLogitCache>,
) -> Result<TrainOutcome> {
    if inputs.train.len() < 2 {
        return Err(Error::TooFewDomains {
            needed: 2,
            got: inputs.train.len(),
        });
    }
    let objective = match cache {
        Some(c) => distill(cfg, c, inputs.tokenizer_id)?,
        None => Objective::Gold,
    };
    run(cfg, model, inputs, objective, Kind::Mldg, None)
}

/// A domain-invariant trainer with distillation as the span loss.
pub fn train_kd_with_dil(
    cfg: &TrainConfig,
    model: &EncoderConfig,
    inputs: TrainInputs,
    cache: &TeacherLogitCache,
    companions: Option<&CompanionBank>,
) -> Result<TrainOutcome> {
    expect_method(cfg, &[Method::KdDomainAdv, Method::KdEpisodic, Method::KdMldg])?;
    match cfg.method {
        Method::KdDomainAdv => train_domain_adversarial(cfg, model, inputs, Some(cache)),
        Method::KdEpisodic => {
            let bank = companions.ok_or_else(|| Error::MissingCompanion("companion bank not provided".into()))?;
            train_episodic(cfg, model, inputs, bank, Some(cache))
        }
        _ => train_mldg(cfg, model, inputs, Some(cache)),
    }
}

/// Everything a method may need besides the gold data.
#[derive(Clone, Copy, Default)]
pub struct Resources<'a> {
    pub cache: Option<&'a TeacherLogitCache>,
    pub companions: Option<&'a CompanionBank>,
    pub synthetic: Option<&'a [DomainDataset]>,
}

/// Dispatches on `cfg.method`.
pub fn train(cfg: &TrainConfig, model: &EncoderConfig, inputs: TrainInputs, res: Resources) -> Result<TrainOutcome> {
    let cache = || {
        res.cache
            .ok_or_else(|| Error::InvalidArgument(format!("{} needs cached teacher logits", cfg.method)))
    };
    let bank = || {
        res.companions
            .ok_or_else(|| Error::MissingCompanion(format!("{} needs a companion bank", cfg.method)))
    };
    match cfg.method {
        Method::Erm => train_erm(cfg, model, inputs),
        Method::KdGold => train_kd(cfg, model, inputs, cache()?),
        Method::KdAug => {
            let synthetic = res
                .synthetic
                .ok_or_else(|| Error::InvalidArgument("kd_aug needs synthetic questions".into()))?;
            train_kd_augmented(cfg, model, inputs, synthetic, cache()?)
        }
        Method::DomainAdv => train_domain_adversarial(cfg, model, inputs, None),
        Method::Episodic => train_episodic(cfg, model, inputs, bank()?, None),
        Method::Mldg => train_mldg(cfg, model, inputs, None),
        Method::KdDomainAdv | Method::KdMldg => train_kd_with_dil(cfg, model, inputs, cache()?, None),
        Method::KdEpisodic => train_kd_with_dil(cfg, model, inputs, cache()?, Some(bank()?)),
    }
}

/// One single-domain ERM model per source domain, for episodic training.
pub fn train_companions(
    cfg: &TrainConfig,
    model: &EncoderConfig,
    inputs: TrainInputs,
) -> Result<CompanionBank> {
    let mut models = BTreeMap::new();
    let mut erm = cfg.clone();
    erm.method = Method::Erm;
    for (i, ds) in inputs.train.iter().enumerate() {
        erm.seed = mix(cfg.seed, 0xC0 + i as u64);
        let dev: Vec<DomainDataset> = inputs.dev.iter().filter(|d| d.name == ds.name).cloned().collect();
        let one = TrainInputs {
            train: std::slice::from_ref(ds),
            dev: &dev,
            ..inputs
        };
        models.insert(ds.name.clone(), train_erm(&erm, model, one)?.checkpoint.params);
    }
    Ok(CompanionBank::new(models))
}

//! train and sweep.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};
use dgkd_core::container::write_if_changed;
use dgkd_core::data::{Combo, Split};
use dgkd_core::eval::select_by_score_then_lr;
use dgkd_core::tokenizer::Tokenizer;
use dgkd_core::trainers::{train, write_log, Method, Resources, TrainConfig, TrainInputs};
use log::info;
use serde::{Deserialize, Serialize};

use crate::artifacts::{self, read_json, write_json};
use crate::config::{ExperimentConfig, GridPoint};
use crate::jobs;
use crate::layout::Layout;

/// What one training run leaves next to its checkpoint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub method: Method,
    pub combo: String,
    pub seed: u64,
    pub point: GridPoint,
    pub config: TrainConfig,
    pub dev_scores: BTreeMap<usize, f64>,
    pub best_epoch: usize,
    pub checkpoint_hash: String,
}

impl RunResult {
    pub fn best_dev(&self) -> f64 {
        self.dev_scores[&self.best_epoch]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub combo: String,
    pub point: GridPoint,
    pub dev_macro_f1: f64,
    pub best_epoch: usize,
}

/// Selected grid point per combination for one method.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepManifest {
    pub method: Method,
    pub seed: u64,
    pub rows: Vec<SweepRow>,
}

impl SweepManifest {
    pub fn row(&self, combo: &str) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.combo == combo)
    }
}

/// The grid point `train` uses when none is given: the sweep's choice, or
/// the only point of a one-point grid.
pub fn resolve_point(cfg: &ExperimentConfig, layout: &Layout, method: Method, combo: &str, point: Option<usize>) -> Result<GridPoint> {
    let points = cfg.grid_points(method);
    if let Some(i) = point {
        return points
            .get(i)
            .cloned()
            .with_context(|| format!("grid point {i} out of range; {method} has {} points", points.len()));
    }
    let sweep = layout.sweep(method);
    if sweep.exists() {
        let m: SweepManifest = read_json(&sweep)?;
        let row = m
            .row(combo)
            .with_context(|| format!("{} has no row for {combo}; rerun `dgkd sweep --method {method}`", sweep.display()))?;
        if points.get(row.point.index) != Some(&row.point) {
            bail!("{} no longer matches the config grid; rerun `dgkd sweep --method {method}`", sweep.display());
        }
        return Ok(row.point.clone());
    }
    if points.len() == 1 {
        return Ok(points[0].clone());
    }
    bail!(
        "{method} has {} grid points and no sweep manifest; run `dgkd sweep --method {method}` or pass --point",
        points.len()
    )
}

/// Trains one (method, combo, seed) run and writes checkpoint, log and
/// result under its run directory.
pub fn cmd_train(cfg: &ExperimentConfig, method: Method, combo_id: &str, seed: u64, point: Option<usize>) -> Result<RunResult> {
    let layout = Layout::new(&cfg.output_dir);
    let tok = artifacts::tokenizer(&layout)?;
    let combo: Combo = artifacts::combo(&layout, combo_id)?;
    let point = resolve_point(cfg, &layout, method, combo_id, point)?;
    let tc = cfg.train_config(method, &point, seed);
    let model = cfg.student.encoder(tok.vocab_size(), cfg.windows.max_len);

    let train_sets = artifacts::windows(&layout, Split::Train, &combo.members, tok.id())?;
    let dev_sets = artifacts::windows(&layout, Split::Dev, &combo.members, tok.id())?;
    let cache = if method.uses_teacher() {
        Some(artifacts::logits(&layout, combo_id)?)
    } else {
        None
    };
    let synthetic = if method == Method::KdAug {
        let s = artifacts::windows(&layout, Split::Synthetic, &combo.members, tok.id())?;
        let cache = cache.as_ref().expect("kd_aug uses the teacher");
        if let Some(w) = s.iter().flat_map(|d| &d.windows).find(|w| !cache.contains(&w.window_id)) {
            bail!(
                "logit cache for {combo_id} lacks synthetic window {}; rerun `dgkd cache-logits --combo {combo_id}` after `dgkd generate`",
                w.window_id
            );
        }
        Some(s)
    } else {
        None
    };
    let bank = if method.needs_companions() {
        Some(artifacts::companions(&layout, &combo.members)?)
    } else {
        None
    };

    let inputs = TrainInputs {
        train: &train_sets,
        dev: &dev_sets,
        tokenizer_id: tok.id(),
        combo: combo_id,
    };
    let res = Resources {
        cache: cache.as_ref(),
        companions: bank.as_ref(),
        synthetic: synthetic.as_deref(),
    };
    let out = train(&tc, &model, inputs, res)?;
    let dir = layout.run_dir(method, combo_id, point.index, seed);
    out.checkpoint.save(&dir.join("checkpoint.ckpt"))?;
    write_log(&dir.join("log.jsonl"), &out.log)?;
    let result = RunResult {
        method,
        combo: combo_id.to_string(),
        seed,
        point,
        config: tc,
        dev_scores: out.dev_scores,
        best_epoch: out.best_epoch,
        checkpoint_hash: out.checkpoint.hash(),
    };
    write_json(&dir.join("result.json"), &result)?;
    info!(
        "{method} {combo_id} seed {seed}: dev macro-F1 {:.4} at epoch {}, checkpoint {}",
        result.best_dev(),
        result.best_epoch,
        &result.checkpoint_hash[..16]
    );
    Ok(result)
}

fn train_args(config: &Path, method: Method, combo: &str, seed: u64, point: Option<usize>) -> Vec<String> {
    let mut a = vec![
        "train".to_string(),
        "--config".into(),
        config.display().to_string(),
        "--method".into(),
        method.as_str().into(),
        "--combo".into(),
        combo.into(),
        "--seed".into(),
        seed.to_string(),
    ];
    if let Some(p) = point {
        a.extend(["--point".into(), p.to_string()]);
    }
    a
}

/// Runs `train` for every (combo, seed) pair not pinned by the caller, each
/// in its own process.
pub fn fan_out_train(
    cfg: &ExperimentConfig,
    config_path: &Path,
    method: Method,
    combo: Option<&str>,
    seed: Option<u64>,
    point: Option<usize>,
    jobs: usize,
) -> Result<()> {
    let layout = Layout::new(&cfg.output_dir);
    let combos: Vec<String> = match combo {
        Some(c) => vec![c.to_string()],
        None => artifacts::plan(&layout)?.combos.into_iter().map(|c| c.id).collect(),
    };
    let seeds: Vec<u64> = seed.map(|s| vec![s]).unwrap_or_else(|| cfg.seeds.clone());
    let mut args = Vec::new();
    for c in &combos {
        for &s in &seeds {
            args.push(train_args(config_path, method, c, s, point));
        }
    }
    jobs::run_all(args, jobs)
}

/// Best row among one combo's grid results: highest dev macro-F1, ties to
/// the lowest learning rate, then the earlier grid point.
pub fn select_row(results: &[RunResult]) -> Option<SweepRow> {
    let candidates: Vec<(f64, f64)> = results.iter().map(|r| (r.best_dev(), r.point.learning_rate)).collect();
    select_by_score_then_lr(&candidates).map(|i| {
        let r = &results[i];
        SweepRow {
            combo: r.combo.clone(),
            point: r.point.clone(),
            dev_macro_f1: r.best_dev(),
            best_epoch: r.best_epoch,
        }
    })
}

pub fn sweep_table(m: &SweepManifest) -> String {
    let mut out = String::from("| Method | Combo | LR | Epochs | Best epoch | tau | lambda_adv | lambda_erm | beta | Dev F1 |\n");
    out.push_str("|---|---|---|---|---|---|---|---|---|---|\n");
    for r in &m.rows {
        let p = &r.point;
        writeln!(
            out,
            "| {} | {} | {:e} | {} | {} | {} | {} | {} | {} | {:.1} |",
            m.method,
            r.combo,
            p.learning_rate,
            p.epochs,
            r.best_epoch,
            p.tau,
            p.lambda_adv,
            p.lambda_erm,
            p.beta,
            100.0 * r.dev_macro_f1
        )
        .unwrap();
    }
    out
}

/// Trains every grid point for every combo with the first configured seed
/// (skipping points already trained), then records the selection.
pub fn cmd_sweep(cfg: &ExperimentConfig, config_path: &Path, method: Method, jobs: usize) -> Result<SweepManifest> {
    let layout = Layout::new(&cfg.output_dir);
    let plan = artifacts::plan(&layout)?;
    let seed = cfg.seeds[0];
    let points = cfg.grid_points(method);
    let mut todo = Vec::new();
    for c in &plan.combos {
        for p in &points {
            let done = layout.run_dir(method, &c.id, p.index, seed).join("result.json");
            let current = done.exists() && read_json::<RunResult>(&done).is_ok_and(|r| r.point == *p);
            if !current {
                todo.push(train_args(config_path, method, &c.id, seed, Some(p.index)));
            }
        }
    }
    info!("{method}: {} of {} grid runs to train", todo.len(), plan.combos.len() * points.len());
    jobs::run_all(todo, jobs)?;

    let mut rows = Vec::new();
    for c in &plan.combos {
        let results: Vec<RunResult> = points
            .iter()
            .map(|p| read_json(&layout.run_dir(method, &c.id, p.index, seed).join("result.json")))
            .collect::<Result<_>>()?;
        rows.push(select_row(&results).expect("grid is non-empty"));
    }
    let manifest = SweepManifest { method, seed, rows };
    write_json(&layout.sweep(method), &manifest)?;
    write_if_changed(&layout.sweep_table(method), sweep_table(&manifest).as_bytes())?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn result(index: usize, lr: f64, dev: f64) -> RunResult {
        let point = GridPoint {
            index,
            learning_rate: lr,
            epochs: 2,
            tau: 1.0,
            lambda_adv: 0.1,
            lambda_erm: 0.75,
            beta: 1.0,
        };
        RunResult {
            method: Method::Erm,
            combo: "wo-a".into(),
            seed: 0,
            config: TrainConfig::default(),
            dev_scores: [(1, dev - 0.1), (2, dev)].into(),
            best_epoch: 2,
            checkpoint_hash: String::new(),
            point,
        }
    }

    #[test]
    fn single_point_grid_selects_that_point() {
        let r = result(0, 1e-3, 0.5);
        let row = select_row(std::slice::from_ref(&r)).unwrap();
        assert_eq!(row.point, r.point);
        assert_eq!(row.dev_macro_f1, 0.5);
    }

    #[test]
    fn ties_go_to_the_lowest_learning_rate() {
        let rs = [result(0, 3e-3, 0.6), result(1, 1e-3, 0.6), result(2, 2e-3, 0.55)];
        assert_eq!(select_row(&rs).unwrap().point.index, 1);
        let rs = [result(0, 3e-3, 0.61), result(1, 1e-3, 0.6)];
        assert_eq!(select_row(&rs).unwrap().point.index, 0);
    }

    #[test]
    fn sweep_table_has_one_row_per_combo() {
        let m = SweepManifest {
            method: Method::KdGold,
            seed: 0,
            rows: ["wo-a", "wo-b", "wo-c"]
                .iter()
                .map(|c| SweepRow {
                    combo: c.to_string(),
                    point: result(0, 1e-3, 0.5).point,
                    dev_macro_f1: 0.5,
                    best_epoch: 2,
                })
                .collect(),
        };
        let t = sweep_table(&m);
        assert_eq!(t.lines().count(), 2 + 3);
        assert!(t.contains("| kd_gold | wo-b | 1e-3 | 2 | 2 | 1 | 0.1 | 0.75 | 1 | 50.0 |"));
    }
}

//! evaluate, coverage and report.

use std::collections::BTreeMap;

use anyhow::{bail, Result};
use dgkd_core::container::write_if_changed;
use dgkd_core::data::Split;
use dgkd_core::eval::report::{average_table, coverage_csv, id_vs_ood_table, ood_table, ttest_table, IdOodRow};
use dgkd_core::eval::{
    aggregate_runs, coverage, dataset_f1, macro_f1, paired_t_test, predict_dataset, read_score_dump, score_predictions,
    write_predictions, write_score_dump, CoverageReport, MethodRunResult, ModelScores, TTest,
};
use dgkd_core::model::Checkpoint;
use dgkd_core::tokenizer::Tokenizer;
use dgkd_core::trainers::Method;
use log::info;
use serde::{Deserialize, Serialize};

use crate::artifacts::{self, read_json, write_json};
use crate::commands::train::resolve_point;
use crate::config::ExperimentConfig;
use crate::layout::Layout;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DevScore {
    pub dev_macro_f1: f64,
    pub per_dataset: BTreeMap<String, f64>,
}

fn methods(cfg: &ExperimentConfig, only: Option<Method>) -> Result<Vec<Method>> {
    match only {
        Some(m) => Ok(vec![m]),
        None => cfg.report.methods.iter().map(|m| Ok(m.parse()?)).collect(),
    }
}

/// Every (combo, seed) the configuration expects a model for.
fn runs(cfg: &ExperimentConfig, layout: &Layout) -> Result<Vec<(String, u64)>> {
    let plan = artifacts::plan(layout)?;
    Ok(plan
        .combos
        .iter()
        .flat_map(|c| cfg.seeds.iter().map(move |&s| (c.id.clone(), s)))
        .collect())
}

fn refuse_partial(missing: &[String], allow_partial: bool) -> Result<()> {
    if missing.is_empty() {
        return Ok(());
    }
    if allow_partial {
        log::warn!("skipping {} missing artifact(s):\n  {}", missing.len(), missing.join("\n  "));
        return Ok(());
    }
    bail!(
        "{} missing artifact(s) (pass --allow-partial to continue without them):\n  {}",
        missing.len(),
        missing.join("\n  ")
    )
}

/// Predictions, per-example scores on every target test set, and the
/// in-domain dev score of each trained model. Never trains.
pub fn cmd_evaluate(cfg: &ExperimentConfig, only: Option<Method>, allow_partial: bool) -> Result<usize> {
    let layout = Layout::new(&cfg.output_dir);
    let tok = artifacts::tokenizer(&layout)?;
    let target_names: Vec<String> = cfg.targets.iter().map(|t| t.name.clone()).collect();
    let test = artifacts::windows(&layout, Split::Test, &target_names, tok.id())?;
    let mut missing = Vec::new();
    let mut done = 0;
    for method in methods(cfg, only)? {
        for (combo_id, seed) in runs(cfg, &layout)? {
            let point = match resolve_point(cfg, &layout, method, &combo_id, None) {
                Ok(p) => p,
                Err(e) => {
                    missing.push(format!("{method} {combo_id} seed {seed}: {e}"));
                    continue;
                }
            };
            let ckpt = layout.run_dir(method, &combo_id, point.index, seed).join("checkpoint.ckpt");
            if !ckpt.exists() {
                missing.push(format!(
                    "{}; run `dgkd train --method {method} --combo {combo_id} --seed {seed}`",
                    ckpt.display()
                ));
                continue;
            }
            let model = Checkpoint::load(&ckpt)?;
            let max_answer = cfg.train.max_answer_len;
            let mut records = Vec::new();
            let mut preds = BTreeMap::new();
            for ds in &test {
                let p = predict_dataset(&model.params, ds, max_answer)?;
                records.extend(score_predictions(ds, &p)?);
                preds.extend(p.into_iter().map(|(q, t)| (format!("{}/{q}", ds.name), t)));
            }
            write_predictions(&layout.predictions(method, &combo_id, seed), &preds)?;
            write_score_dump(&layout.scores(method, &combo_id, seed), &records)?;
            let combo = artifacts::combo(&layout, &combo_id)?;
            let dev = artifacts::windows(&layout, Split::Dev, &combo.members, tok.id())?;
            let per_dataset = dataset_f1(&model.params, &dev, max_answer)?;
            let dev_score = DevScore {
                dev_macro_f1: macro_f1(&per_dataset)?,
                per_dataset,
            };
            write_json(&layout.dev_score(method, &combo_id, seed), &dev_score)?;
            info!("{method} {combo_id} seed {seed}: {} test predictions", records.len());
            done += 1;
        }
    }
    refuse_partial(&missing, allow_partial)?;
    Ok(done)
}

/// Score dumps of one method: model id → dataset → per-example F1 in dump
/// order, plus the in-domain dev scores.
struct MethodScores {
    models: ModelScores,
    /// `dataset/qid` → F1 averaged over models.
    per_example: BTreeMap<String, f64>,
    dev: Vec<f64>,
}

fn load_method(cfg: &ExperimentConfig, layout: &Layout, method: Method, missing: &mut Vec<String>) -> Result<Option<MethodScores>> {
    let mut models: ModelScores = BTreeMap::new();
    let mut sums: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    let mut dev = Vec::new();
    let before = missing.len();
    for (combo, seed) in runs(cfg, layout)? {
        let scores = layout.scores(method, &combo, seed);
        let dev_path = layout.dev_score(method, &combo, seed);
        if !scores.exists() || !dev_path.exists() {
            missing.push(format!(
                "{}; run `dgkd evaluate --method {method}`",
                scores.display()
            ));
            continue;
        }
        let mut per_set: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        for r in read_score_dump(&scores)? {
            per_set.entry(r.dataset.clone()).or_default().push(r.f1);
            let e = sums.entry(format!("{}/{}", r.dataset, r.qid)).or_default();
            e.0 += r.f1;
            e.1 += 1;
        }
        models.insert(format!("{combo}/s{seed}"), per_set);
        dev.push(read_json::<DevScore>(&dev_path)?.dev_macro_f1);
    }
    // Families with only some runs missing are kept; the caller refuses
    // them unless partial reports are allowed.
    if missing.len() > before && models.is_empty() {
        return Ok(None);
    }
    let per_example = sums.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect();
    Ok(Some(MethodScores { models, per_example, dev }))
}

fn load_all(cfg: &ExperimentConfig, layout: &Layout, allow_partial: bool) -> Result<Vec<(Method, MethodScores)>> {
    let mut missing = Vec::new();
    let mut out = Vec::new();
    for m in methods(cfg, None)? {
        if let Some(s) = load_method(cfg, layout, m, &mut missing)? {
            out.push((m, s));
        }
    }
    refuse_partial(&missing, allow_partial)?;
    Ok(out)
}

/// Ordered (covered, covering) pairs over the non-baseline methods.
pub fn coverage_reports(baseline: &BTreeMap<String, f64>, methods: &[(String, BTreeMap<String, f64>)]) -> Result<Vec<CoverageReport>> {
    let mut out = Vec::new();
    for (a, ma) in methods {
        for (b, mb) in methods {
            if a != b {
                out.push(coverage(a, b, baseline, ma, mb)?);
            }
        }
    }
    Ok(out)
}

pub fn cmd_coverage(cfg: &ExperimentConfig, allow_partial: bool) -> Result<Vec<CoverageReport>> {
    let layout = Layout::new(&cfg.output_dir);
    let all = load_all(cfg, &layout, allow_partial)?;
    let baseline_name = &cfg.report.methods[0];
    let Some((_, base)) = all.iter().find(|(m, _)| m.as_str() == baseline_name) else {
        bail!("coverage needs the baseline {baseline_name}; run `dgkd evaluate --method {baseline_name}`");
    };
    let others: Vec<(String, BTreeMap<String, f64>)> = all
        .iter()
        .filter(|(m, _)| m.as_str() != baseline_name)
        .map(|(m, s)| (m.as_str().to_string(), s.per_example.clone()))
        .collect();
    let reports = coverage_reports(&base.per_example, &others)?;
    write_if_changed(&layout.coverage(), coverage_csv(&reports).as_bytes())?;
    Ok(reports)
}

/// Everything the report renders, already aggregated.
pub struct ReportInputs {
    pub ood: Vec<MethodRunResult>,
    /// F1 points (0-100), baseline first.
    pub id_vs_ood: Vec<IdOodRow>,
    pub ttests: Vec<(String, String, TTest)>,
}

pub fn render_report(r: &ReportInputs) -> String {
    let mut out = String::from("# Results\n\n## Out-of-domain F1\n\n");
    out.push_str("Mean ± sample SD over trained models (combination × seed), in F1 points.\n\n");
    out.push_str(&ood_table(&r.ood));
    out.push_str("\n## Average F1\n\n");
    let avgs: Vec<(String, f64)> = r.ood.iter().map(|m| (m.method.clone(), m.overall.mean)).collect();
    out.push_str(&average_table(&avgs));
    out.push_str("\n## In-domain vs out-of-domain\n\n");
    out.push_str("Relative gain over the first row in parentheses.\n\n");
    out.push_str(&id_vs_ood_table(&r.id_vs_ood));
    out.push_str("\n## Significance\n\n");
    out.push_str(
        "Paired t-test over per-example F1, pooled across all target test sets; each example's F1 is \
         averaged over the models of a method first.\n\n",
    );
    out.push_str(&ttest_table(&r.ttests));
    out
}

fn paired(a: &BTreeMap<String, f64>, b: &BTreeMap<String, f64>) -> Result<TTest> {
    if a.len() != b.len() || !a.keys().all(|k| b.contains_key(k)) {
        bail!("methods were scored on different examples");
    }
    let xs: Vec<f64> = a.values().copied().collect();
    let ys: Vec<f64> = a.keys().map(|k| b[k]).collect();
    Ok(paired_t_test(&xs, &ys)?)
}

pub fn cmd_report(cfg: &ExperimentConfig, allow_partial: bool) -> Result<String> {
    let layout = Layout::new(&cfg.output_dir);
    let all = load_all(cfg, &layout, allow_partial)?;
    if all.is_empty() {
        bail!("no evaluated models to report");
    }
    let mut ood = Vec::new();
    let mut id_vs_ood = Vec::new();
    for (m, s) in &all {
        let r = aggregate_runs(m.as_str(), s.models.clone())?;
        id_vs_ood.push(IdOodRow {
            method: m.as_str().to_string(),
            id_dev: 100.0 * dgkd_core::eval::mean(&s.dev),
            ood_test: 100.0 * r.overall.mean,
        });
        ood.push(r);
    }
    let (base_name, base) = (&all[0].0, &all[0].1);
    let mut ttests = Vec::new();
    for (m, s) in &all[1..] {
        ttests.push((m.as_str().to_string(), base_name.as_str().to_string(), paired(&s.per_example, &base.per_example)?));
    }
    let text = render_report(&ReportInputs { ood, id_vs_ood, ttests });
    write_if_changed(&layout.report(), text.as_bytes())?;
    Ok(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(method: &str, id_dev: f64, ood_test: f64) -> IdOodRow {
        IdOodRow {
            method: method.into(),
            id_dev,
            ood_test,
        }
    }

    #[test]
    fn report_renders_reference_relative_gains() {
        let inputs = ReportInputs {
            ood: vec![],
            id_vs_ood: vec![row("erm", 75.0, 53.1), row("kd_gold", 76.4, 56.2), row("kd_aug", 77.2, 57.6)],
            ttests: vec![],
        };
        let text = render_report(&inputs);
        assert!(text.contains("| kd_gold | 76.4 (1.9%) |"), "{text}");
        assert!(text.contains("| kd_aug | 77.2 (2.9%) |"), "{text}");
    }

    #[test]
    fn six_methods_give_thirty_coverage_rows() {
        let q = |v: &[f64]| -> BTreeMap<String, f64> { v.iter().enumerate().map(|(i, x)| (format!("d/q{i}"), *x)).collect() };
        let base = q(&[0.0, 0.5]);
        let methods: Vec<(String, BTreeMap<String, f64>)> =
            (0..6).map(|i| (format!("m{i}"), q(&[0.1 * i as f64, 0.6]))).collect();
        let reports = coverage_reports(&base, &methods).unwrap();
        assert_eq!(reports.len(), 30);
        assert!(reports.iter().all(|r| r.covered != r.covering));
        assert_eq!(coverage_csv(&reports).lines().count(), 31);
    }

    #[test]
    fn partial_results_are_refused_by_default() {
        let missing = vec!["x".to_string()];
        assert!(refuse_partial(&missing, false).is_err());
        assert!(refuse_partial(&missing, true).is_ok());
        assert!(refuse_partial(&[], false).is_ok());
    }
}

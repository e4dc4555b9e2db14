//! Markdown tables and CSV exports for experiment results.

use std::collections::BTreeMap;
use std::fmt::Write;

use super::aggregate::MethodRunResult;
use super::coverage::{Coverage, CoverageReport};
use super::ttest::TTest;

/// Relative gain of `new` over `base`, in percent.
pub fn relative_gain(base: f64, new: f64) -> f64 {
    100.0 * (new - base) / base
}

/// `"1.9%"`-style rendering of [`relative_gain`].
pub fn format_gain(base: f64, new: f64) -> String {
    format!("{:.1}%", relative_gain(base, new))
}

fn pct(x: f64) -> String {
    format!("{:.1}", 100.0 * x)
}

/// Out-of-domain results: one row per method, one column per target set,
/// cells `mean±sd` in F1 points, plus the macro average.
pub fn ood_table(results: &[MethodRunResult]) -> String {
    let datasets: Vec<&String> = results
        .first()
        .map(|r| r.per_dataset.keys().collect())
        .unwrap_or_default();
    let mut out = String::new();
    write!(out, "| Method |").unwrap();
    for d in &datasets {
        write!(out, " {d} |").unwrap();
    }
    writeln!(out, " Avg. |").unwrap();
    writeln!(out, "|---|{}---|", "---|".repeat(datasets.len())).unwrap();
    for r in results {
        write!(out, "| {} |", r.method).unwrap();
        for d in &datasets {
            match r.per_dataset.get(*d) {
                Some(m) => write!(out, " {}±{} |", pct(m.mean), pct(m.sd)).unwrap(),
                None => write!(out, " n/a |").unwrap(),
            }
        }
        writeln!(out, " {}±{} |", pct(r.overall.mean), pct(r.overall.sd)).unwrap();
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct IdOodRow {
    pub method: String,
    /// Scores in F1 points (0-100).
    pub id_dev: f64,
    pub ood_test: f64,
}

/// In-domain vs out-of-domain comparison; the first row is the baseline and
/// every other row shows its relative gain over it.
pub fn id_vs_ood_table(rows: &[IdOodRow]) -> String {
    let mut out = String::from("| Method | ID-Dev | OOD-Test |\n|---|---|---|\n");
    let Some(base) = rows.first() else { return out };
    writeln!(out, "| {} | {:.1} | {:.1} |", base.method, base.id_dev, base.ood_test).unwrap();
    for r in &rows[1..] {
        writeln!(
            out,
            "| {} | {:.1} ({}) | {:.1} ({}) |",
            r.method,
            r.id_dev,
            format_gain(base.id_dev, r.id_dev),
            r.ood_test,
            format_gain(base.ood_test, r.ood_test)
        )
        .unwrap();
    }
    out
}

/// Method → average F1 table (KD combined with domain-invariant methods).
pub fn average_table(rows: &[(String, f64)]) -> String {
    let mut out = String::from("| Method | Avg. F1 |\n|---|---|\n");
    for (m, v) in rows {
        writeln!(out, "| {m} | {} |", pct(*v)).unwrap();
    }
    out
}

/// Significance table for method pairs.
pub fn ttest_table(rows: &[(String, String, TTest)]) -> String {
    let mut out = String::from("| A | B | t | p (two-tailed) |\n|---|---|---|---|\n");
    for (a, b, r) in rows {
        writeln!(out, "| {a} | {b} | {:.3} | {:.3e} |", r.t, r.p).unwrap();
    }
    out
}

/// One row per (covered, covering) pair.
pub fn coverage_csv(reports: &[CoverageReport]) -> String {
    let mut out = String::from("covered,covering,coverage_pct,examples\n");
    for r in reports {
        let cov = match r.coverage {
            Coverage::Percent(p) => format!("{p:.2}"),
            Coverage::Undefined => "undefined".to_string(),
        };
        writeln!(out, "{},{},{},{}", r.covered, r.covering, cov, r.examples.len()).unwrap();
    }
    out
}

/// Per-dataset means of one result, for JSON summaries.
pub fn dataset_means(r: &MethodRunResult) -> BTreeMap<String, f64> {
    r.per_dataset.iter().map(|(k, v)| (k.clone(), v.mean)).collect()
}

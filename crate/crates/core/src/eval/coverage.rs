use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "percent", rename_all = "lowercase")]
pub enum Coverage {
    Percent(f64),
    /// M never beats the baseline, so there is nothing to cover.
    Undefined,
}

impl Coverage {
    pub fn percent(self) -> Option<f64> {
        match self {
            Coverage::Percent(p) => Some(p),
            Coverage::Undefined => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub covered: String,
    pub covering: String,
    /// Questions where the covered method strictly beats the baseline.
    pub examples: Vec<String>,
    pub coverage: Coverage,
}

/// How much of method M's gain set E = {q : m[q] > erm[q]} method M′ retains:
/// `100 · mean(m′ over E) / mean(m over E)`.
pub fn coverage(
    covered: &str,
    covering: &str,
    erm: &BTreeMap<String, f64>,
    m: &BTreeMap<String, f64>,
    mprime: &BTreeMap<String, f64>,
) -> Result<CoverageReport> {
    if erm.len() != m.len() || erm.len() != mprime.len() || !erm.keys().all(|q| m.contains_key(q) && mprime.contains_key(q))
    {
        return Err(Error::InvalidArgument(
            "coverage needs three score maps over the same questions".into(),
        ));
    }
    let examples: Vec<String> = erm
        .iter()
        .filter(|(q, &base)| m[*q] > base)
        .map(|(q, _)| q.clone())
        .collect();
    let coverage = if examples.is_empty() {
        Coverage::Undefined
    } else {
        let num: f64 = examples.iter().map(|q| mprime[q]).sum();
        let den: f64 = examples.iter().map(|q| m[q]).sum();
        Coverage::Percent(100.0 * num / den)
    };
    Ok(CoverageReport {
        covered: covered.to_string(),
        covering: covering.to_string(),
        examples,
        coverage,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scores(v: &[f64]) -> BTreeMap<String, f64> {
        v.iter().enumerate().map(|(i, &s)| (format!("q{}", i + 1), s)).collect()
    }

    #[test]
    fn three_example_fixture_gives_fifty_percent() {
        let r = coverage("M", "M'", &scores(&[0.0, 0.5, 1.0]), &scores(&[0.5, 0.4, 1.0]), &scores(&[0.25, 0.9, 0.0])).unwrap();
        assert_eq!(r.examples, ["q1"]);
        assert_eq!(r.coverage, Coverage::Percent(50.0));
    }

    #[test]
    fn self_coverage_is_exactly_one_hundred() {
        let m = scores(&[0.3, 0.7, 0.11, 0.9]);
        let r = coverage("M", "M", &scores(&[0.1, 0.8, 0.0, 0.2]), &m, &m).unwrap();
        assert_eq!(r.coverage, Coverage::Percent(100.0));
    }

    #[test]
    fn no_improvement_is_undefined_not_zero() {
        let erm = scores(&[0.5, 0.5]);
        let r = coverage("M", "M'", &erm, &scores(&[0.5, 0.1]), &scores(&[1.0, 1.0])).unwrap();
        assert!(r.examples.is_empty());
        assert_eq!(r.coverage, Coverage::Undefined);
        assert_eq!(r.coverage.percent(), None);
    }

    #[test]
    fn mismatched_question_sets_are_rejected() {
        let mut other = scores(&[0.1, 0.2]);
        other.insert("extra".into(), 0.0);
        assert!(coverage("M", "M'", &scores(&[0.1, 0.2]), &scores(&[0.1, 0.2]), &other).is_err());
    }
}

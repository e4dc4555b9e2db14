use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Unweighted mean over datasets.
pub fn macro_f1(per_dataset: &BTreeMap<String, f64>) -> Result<f64> {
    if per_dataset.is_empty() {
        return Err(Error::InvalidArgument("macro average of no datasets".into()));
    }
    Ok(per_dataset.values().sum::<f64>() / per_dataset.len() as f64)
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n − 1); zero for fewer than two values.
pub fn sample_sd(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (xs.len() - 1) as f64).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanSd {
    pub mean: f64,
    pub sd: f64,
}

impl MeanSd {
    pub fn of(xs: &[f64]) -> Self {
        Self {
            mean: mean(xs),
            sd: sample_sd(xs),
        }
    }
}

/// Per-example F1 lists for every model of one method: combo → dataset → scores.
pub type ModelScores = BTreeMap<String, BTreeMap<String, Vec<f64>>>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodRunResult {
    pub method: String,
    pub models: ModelScores,
    /// Mean ± SD over models of each model's per-dataset mean F1.
    pub per_dataset: BTreeMap<String, MeanSd>,
    /// Macro average of `per_dataset` means, with the SD over models of
    /// each model's own macro average.
    pub overall: MeanSd,
}

impl MethodRunResult {
    /// Per-model mean F1 for every dataset.
    pub fn model_means(&self) -> BTreeMap<String, BTreeMap<String, f64>> {
        self.models
            .iter()
            .map(|(combo, ds)| (combo.clone(), ds.iter().map(|(d, s)| (d.clone(), mean(s))).collect()))
            .collect()
    }
}

pub fn aggregate_runs(method: &str, models: ModelScores) -> Result<MethodRunResult> {
    let Some(first) = models.values().next() else {
        return Err(Error::InvalidArgument(format!("{method}: no models to aggregate")));
    };
    let datasets: Vec<String> = first.keys().cloned().collect();
    if datasets.is_empty() {
        return Err(Error::InvalidArgument(format!("{method}: models evaluated on no datasets")));
    }
    for (combo, ds) in &models {
        if ds.keys().ne(datasets.iter()) {
            return Err(Error::InvalidArgument(format!(
                "{method}: model {combo} was evaluated on {:?}, expected {:?}",
                ds.keys().collect::<Vec<_>>(),
                datasets
            )));
        }
        if let Some((d, _)) = ds.iter().find(|(_, s)| s.is_empty()) {
            return Err(Error::InvalidArgument(format!("{method}: model {combo} has no scores on {d}")));
        }
    }
    let model_means: Vec<BTreeMap<&str, f64>> = models
        .values()
        .map(|ds| ds.iter().map(|(d, s)| (d.as_str(), mean(s))).collect())
        .collect();
    let per_dataset: BTreeMap<String, MeanSd> = datasets
        .iter()
        .map(|d| {
            let xs: Vec<f64> = model_means.iter().map(|m| m[d.as_str()]).collect();
            (d.clone(), MeanSd::of(&xs))
        })
        .collect();
    let macro_mean = per_dataset.values().map(|m| m.mean).sum::<f64>() / per_dataset.len() as f64;
    let per_model_macro: Vec<f64> = model_means
        .iter()
        .map(|m| m.values().sum::<f64>() / m.len() as f64)
        .collect();
    Ok(MethodRunResult {
        method: method.to_string(),
        models,
        per_dataset,
        overall: MeanSd {
            mean: macro_mean,
            sd: sample_sd(&per_model_macro),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn macro_of_two_and_one() {
        let m: BTreeMap<String, f64> = [("A".into(), 0.4), ("B".into(), 0.6)].into();
        assert!((macro_f1(&m).unwrap() - 0.5).abs() < 1e-15);
        let one: BTreeMap<String, f64> = [("A".into(), 0.37)].into();
        assert_eq!(macro_f1(&one).unwrap(), 0.37);
        assert!(macro_f1(&BTreeMap::new()).is_err());
    }

    #[test]
    fn two_models_mean_and_sample_sd() {
        let models: ModelScores = [
            ("c1".to_string(), [("T".to_string(), vec![0.5])].into()),
            ("c2".to_string(), [("T".to_string(), vec![0.7])].into()),
        ]
        .into();
        let r = aggregate_runs("erm", models).unwrap();
        let t = r.per_dataset["T"];
        assert!((t.mean - 0.6).abs() < 1e-12);
        // textbook sample SD: sqrt(((0.5-0.6)^2 + (0.7-0.6)^2) / 1)
        assert!((t.sd - (0.02f64).sqrt()).abs() < 1e-12);
        assert!((t.sd - 0.1414).abs() < 1e-4);
    }

    #[test]
    fn identical_models_have_zero_sd() {
        let scores: BTreeMap<String, Vec<f64>> = [("T".to_string(), vec![0.2, 0.9])].into();
        let models: ModelScores = [("a".to_string(), scores.clone()), ("b".to_string(), scores)].into();
        let r = aggregate_runs("m", models).unwrap();
        assert_eq!(r.per_dataset["T"].sd, 0.0);
        assert_eq!(r.overall.sd, 0.0);
    }

    #[test]
    fn full_protocol_shape() {
        let datasets = ["BioASQ", "DROP", "DuoRC", "RACE", "RelationExtraction", "TextbookQA"];
        let models: ModelScores = (0..6)
            .map(|c| {
                (
                    format!("combo{c}"),
                    datasets.iter().map(|d| (d.to_string(), vec![0.1 * c as f64, 0.5])).collect(),
                )
            })
            .collect();
        let r = aggregate_runs("kd_aug", models).unwrap();
        assert_eq!(r.per_dataset.len(), 6);
    }

    #[test]
    fn ragged_inputs_are_rejected() {
        let models: ModelScores = [
            ("a".to_string(), [("T".to_string(), vec![0.5])].into()),
            ("b".to_string(), [("U".to_string(), vec![0.7])].into()),
        ]
        .into();
        assert!(aggregate_runs("m", models).is_err());
    }

    proptest! {
        #[test]
        fn aggregate_matches_bruteforce_recomputation(
            raw in prop::collection::vec(prop::collection::vec(prop::collection::vec(0.0f64..=1.0, 1..6), 3), 2..5)
        ) {
            let names = ["X", "Y", "Z"];
            let models: ModelScores = raw.iter().enumerate().map(|(m, per)| {
                (format!("m{m}"), per.iter().enumerate().map(|(d, s)| (names[d].to_string(), s.clone())).collect())
            }).collect();
            let r = aggregate_runs("p", models).unwrap();
            for (d, name) in names.iter().enumerate() {
                let means: Vec<f64> = raw.iter().map(|per| per[d].iter().sum::<f64>() / per[d].len() as f64).collect();
                let mu = means.iter().sum::<f64>() / means.len() as f64;
                let var = means.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (means.len() - 1) as f64;
                prop_assert!((r.per_dataset[*name].mean - mu).abs() < 1e-12);
                prop_assert!((r.per_dataset[*name].sd - var.sqrt()).abs() < 1e-12);
                prop_assert!(r.per_dataset[*name].mean >= 0.0 && r.per_dataset[*name].mean <= 1.0);
            }
            let ds_means: BTreeMap<String, f64> = r.per_dataset.iter().map(|(k, v)| (k.clone(), v.mean)).collect();
            let m = macro_f1(&ds_means).unwrap();
            prop_assert!((r.overall.mean - m).abs() < 1e-12);
            let lo = ds_means.values().cloned().fold(f64::INFINITY, f64::min);
            let hi = ds_means.values().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(m >= lo - 1e-12 && m <= hi + 1e-12);
        }
    }
}

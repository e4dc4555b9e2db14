//! Episodic training: a random side of a layer split is trained while the
//! other side is frozen at a companion model's values.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::losses::{span_loss, Objective};
use super::step::{mean_loss_grads, mix, values_of, WindowTerm};
use crate::data::Batch;
use crate::error::{Error, Result};
use crate::model::{forward_on_tape, grads_axpy, split_parameters, Grads, ParameterSet, ParameterSplit, Side};
use crate::tensor::Matrix;

/// Single-domain ERM models keyed by domain.
#[derive(Clone, Debug, Default)]
pub struct CompanionBank {
    pub models: BTreeMap<String, ParameterSet>,
}

impl CompanionBank {
    pub fn new(models: BTreeMap<String, ParameterSet>) -> Self {
        Self { models }
    }

    /// Checks there is exactly one companion per domain and that all share the
    /// student's encoder shape.
    pub fn check(&self, domains: &[String], student: &ParameterSet) -> Result<()> {
        for d in domains {
            let Some(m) = self.models.get(d) else {
                return Err(Error::MissingCompanion(d.clone()));
            };
            let compatible = m.config.num_layers == student.config.num_layers
                && m.config.hidden_dim == student.config.hidden_dim
                && m.config.vocab_size == student.config.vocab_size
                && m.config.ffn_dim == student.config.ffn_dim
                && m.config.max_len == student.config.max_len;
            if !compatible {
                return Err(Error::ShapeMismatch(format!("companion for {d} has a different encoder shape")));
            }
        }
        if let Some(extra) = self.models.keys().find(|k| !domains.contains(k)) {
            return Err(Error::InvalidArgument(format!("companion for {extra} is not a source domain of this run")));
        }
        if domains.len() < 2 {
            return Err(Error::TooFewDomains {
                needed: 2,
                got: domains.len(),
            });
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct EpisodicStep {
    /// `λ_erm·∇L_full + λ_episodic·∇L_hybrid`.
    pub grads: Grads,
    /// Gradient of the hybrid loss alone (zero on the frozen side).
    pub hybrid_grads: Grads,
    pub split: ParameterSplit,
    pub donor: String,
    pub loss_full: f64,
    pub loss_episodic: f64,
}

/// Draws the split layer, trainable side and donor domain for one step.
pub fn sample_episode(
    num_layers: usize,
    batch_domain: &str,
    bank: &CompanionBank,
    rng: &mut ChaCha8Rng,
) -> Result<(usize, Side, String)> {
    if num_layers < 2 {
        return Err(Error::LayerOutOfRange { k: 1, max: 0 });
    }
    let k = rng.gen_range(1..num_layers);
    let side = if rng.gen::<bool>() { Side::Upper } else { Side::Lower };
    let donors: Vec<&String> = bank.models.keys().filter(|d| *d != batch_domain).collect();
    if donors.is_empty() {
        return Err(Error::MissingCompanion(format!("any domain other than {batch_domain}")));
    }
    let donor = donors[rng.gen_range(0..donors.len())].clone();
    Ok((k, side, donor))
}

pub fn episodic_step(
    params: &ParameterSet,
    bank: &CompanionBank,
    batch: &Batch<'_>,
    objective: Objective,
    lambda_erm: f64,
    rng: &mut ChaCha8Rng,
    dropout_seed: Option<u64>,
) -> Result<EpisodicStep> {
    let (k, side, donor) = sample_episode(params.config.num_layers, batch.domain, bank, rng)?;
    let split = split_parameters(params, k, side)?;
    let companion = &bank.models[&donor];
    let mask = split.tensor_mask(params);
    let cfg = &params.config;
    let build = |tape: &mut _, bound: &_, w: &_, rng: Option<&mut ChaCha8Rng>| {
        let out = forward_on_tape(tape, bound, cfg, w, rng)?;
        Ok(WindowTerm {
            loss: span_loss(tape, &out, w, objective)?,
            parts: vec![],
        })
    };

    let own = values_of(params);
    let (loss_full, _, full) = mean_loss_grads(params, &own, &vec![true; own.len()], &batch.windows, dropout_seed, build)?;

    let hybrid: Vec<Matrix> = params
        .tensors
        .iter()
        .zip(&companion.tensors)
        .zip(&mask)
        .map(|((mine, theirs), &trainable)| if trainable { mine.value.clone() } else { theirs.value.clone() })
        .collect();
    let seed = dropout_seed.map(|s| mix(s, 0xE915));
    let (loss_episodic, _, hybrid_grads) = mean_loss_grads(params, &hybrid, &mask, &batch.windows, seed, build)?;

    let mut grads = params.zero_grads();
    grads_axpy(&mut grads, lambda_erm, &full);
    grads_axpy(&mut grads, 1.0 - lambda_erm, &hybrid_grads);
    Ok(EpisodicStep {
        grads,
        hybrid_grads,
        split,
        donor,
        loss_full,
        loss_episodic,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trainers::step::batch_span_grads;
    use crate::trainers::testutil::{tiny_config, tiny_windows};
    use rand::SeedableRng;

    fn bank() -> CompanionBank {
        let cfg = tiny_config();
        CompanionBank::new(
            [
                ("A".to_string(), ParameterSet::init(&cfg, 0, 100).unwrap()),
                ("B".to_string(), ParameterSet::init(&cfg, 0, 101).unwrap()),
                ("C".to_string(), ParameterSet::init(&cfg, 0, 102).unwrap()),
            ]
            .into(),
        )
    }

    #[test]
    fn frozen_side_gets_no_gradient_and_donor_differs() {
        let p = ParameterSet::init(&tiny_config(), 0, 1).unwrap();
        let b = bank();
        let before = b.models.clone();
        let ws = tiny_windows();
        let batch = Batch {
            domain: "A",
            windows: vec![&ws[0], &ws[2]],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let s = episodic_step(&p, &b, &batch, Objective::Gold, 0.75, &mut rng, None).unwrap();
            assert_ne!(s.donor, "A");
            for ((t, g), trainable) in p.tensors.iter().zip(&s.hybrid_grads).zip(s.split.tensor_mask(&p)) {
                if !trainable {
                    assert!(g.data().iter().all(|&x| x == 0.0), "{} received gradient", t.name);
                }
            }
            assert!(s.hybrid_grads.iter().any(|g| g.max_abs() > 0.0));
        }
        assert_eq!(b.models, before);
    }

    #[test]
    fn zero_episodic_weight_is_an_erm_step() {
        let p = ParameterSet::init(&tiny_config(), 0, 2).unwrap();
        let ws = tiny_windows();
        let batch = Batch {
            domain: "B",
            windows: vec![&ws[1]],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s = episodic_step(&p, &bank(), &batch, Objective::Gold, 1.0, &mut rng, Some(5)).unwrap();
        let (_, g) = batch_span_grads(&p, &batch.windows, Objective::Gold, Some(5)).unwrap();
        assert_eq!(s.grads, g);
    }

    #[test]
    fn bank_checks() {
        let p = ParameterSet::init(&tiny_config(), 0, 2).unwrap();
        let b = bank();
        let doms = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        assert!(b.check(&doms(&["A", "B", "C"]), &p).is_ok());
        assert!(matches!(b.check(&doms(&["A", "B", "C", "D"]), &p), Err(Error::MissingCompanion(d)) if d == "D"));
        assert!(b.check(&doms(&["A", "B"]), &p).is_err());
    }
}

//! Domain-adversarial training: a linear domain classifier reads the pooled
//! representation through a gradient-reversal node.

use super::losses::{span_loss, Objective};
use super::step::{mean_loss_grads, values_of, WindowTerm};
use crate::data::Window;
use crate::error::{Error, Result};
use crate::model::{domain_logits, forward_on_tape, pooled_on_tape, Grads, ParameterSet};

#[derive(Clone, Debug)]
pub struct AdversarialStep {
    pub grads: Grads,
    pub span_loss: f64,
    pub domain_loss: f64,
}

/// Span loss plus domain cross-entropy. The classifier head sees the plain
/// domain-loss gradient; everything below the reversal sees it multiplied by
/// `−lambda_adv`.
pub fn adversarial_step(
    params: &ParameterSet,
    windows: &[&Window],
    domain_label: usize,
    objective: Objective,
    lambda_adv: f64,
    dropout_seed: Option<u64>,
) -> Result<AdversarialStep> {
    if params.num_domains < 2 {
        return Err(Error::TooFewDomains {
            needed: 2,
            got: params.num_domains,
        });
    }
    if domain_label >= params.num_domains {
        return Err(Error::InvalidArgument(format!(
            "domain label {domain_label} outside {} classes",
            params.num_domains
        )));
    }
    let values = values_of(params);
    let cfg = &params.config;
    let (_, parts, grads) = mean_loss_grads(params, &values, &vec![true; values.len()], windows, dropout_seed, |tape, bound, w, rng| {
        let out = forward_on_tape(tape, bound, cfg, w, rng)?;
        let span = span_loss(tape, &out, w, objective)?;
        let pooled = pooled_on_tape(tape, out.hidden, w.num_tokens);
        let rev = tape.grad_reverse(pooled, lambda_adv);
        let logits = domain_logits(tape, bound, rev)?;
        let dom = tape.cross_entropy(logits, domain_label, params.num_domains);
        Ok(WindowTerm {
            loss: tape.add(span, dom),
            parts: vec![span, dom],
        })
    })?;
    Ok(AdversarialStep {
        grads,
        span_loss: parts[0],
        domain_loss: parts[1],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autograd::Tape;
    use crate::model::{DOMAIN_HEAD, SPAN_HEAD};
    use crate::trainers::step::batch_span_grads;
    use crate::trainers::testutil::{assert_fd, tiny_config, tiny_windows};

    /// Domain cross-entropy alone, no reversal.
    fn domain_ce(p: &ParameterSet, w: &Window, label: usize) -> (f64, Grads) {
        let mut tape = Tape::<f64>::new();
        let bound = p.bind(&mut tape);
        let out = forward_on_tape(&mut tape, &bound, &p.config, w, None).unwrap();
        let pooled = pooled_on_tape(&mut tape, out.hidden, w.num_tokens);
        let logits = domain_logits(&mut tape, &bound, pooled).unwrap();
        let l = tape.cross_entropy(logits, label, p.num_domains);
        let g = tape.backward(l);
        (tape.scalar(l), p.collect_grads(&g, &bound))
    }

    #[test]
    fn encoder_sees_negated_scaled_domain_gradient() {
        let p = ParameterSet::init(&tiny_config(), 3, 7).unwrap();
        let ws = tiny_windows();
        let lambda = 0.3;
        let adv = adversarial_step(&p, &[&ws[0]], 2, Objective::Gold, lambda, None).unwrap();
        let (_, span) = batch_span_grads(&p, &[&ws[0]], Objective::Gold, None).unwrap();
        let (_, dom) = domain_ce(&p, &ws[0], 2);
        // finite-difference oracle for the plain domain gradient
        let f = |th: &[f64]| {
            let mut q = p.clone();
            q.set_flat(th);
            domain_ce(&q, &ws[0], 2).0
        };
        assert_fd(&f, &p.to_flat(), &crate::model::grads_to_flat(&dom), 1e-4);
        for (((t, a), s), d) in p.tensors.iter().zip(&adv.grads).zip(&span).zip(&dom) {
            let scale = if t.group == DOMAIN_HEAD { 1.0 } else { -lambda };
            for ((&x, &y), &z) in a.data().iter().zip(s.data()).zip(d.data()) {
                let expect = y + scale * z;
                assert!((x - expect).abs() <= 1e-10 * (1.0 + expect.abs()), "{}", t.name);
            }
        }
    }

    #[test]
    fn zero_lambda_leaves_encoder_on_the_span_gradient() {
        let p = ParameterSet::init(&tiny_config(), 2, 7).unwrap();
        let ws = tiny_windows();
        let adv = adversarial_step(&p, &[&ws[0], &ws[2]], 0, Objective::Gold, 0.0, Some(3)).unwrap();
        let (_, span) = batch_span_grads(&p, &[&ws[0], &ws[2]], Objective::Gold, Some(3)).unwrap();
        for ((t, a), s) in p.tensors.iter().zip(&adv.grads).zip(&span) {
            if t.group != DOMAIN_HEAD {
                assert_eq!(a, s, "{}", t.name);
            }
        }
        assert!(p.tensors.iter().any(|t| t.group == SPAN_HEAD));
    }

    #[test]
    fn needs_two_domains() {
        let p = ParameterSet::init(&tiny_config(), 0, 7).unwrap();
        let ws = tiny_windows();
        assert!(adversarial_step(&p, &[&ws[0]], 0, Objective::Gold, 0.1, None).is_err());
    }
}

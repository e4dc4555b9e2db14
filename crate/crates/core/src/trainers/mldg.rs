//! Meta-learning for domain generalization with exact second-order
//! meta-gradients. Hessian-vector products come from running the reverse
//! sweep over dual numbers.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::losses::{span_loss, Objective};
use super::step::{mean_loss_grads, mix, WindowTerm};
use crate::autograd::Tape;
use crate::data::{Batch, Window};
use crate::error::{Error, Result};
use crate::model::{forward_on_tape, grads_from_flat, Grads, ParameterSet};
use crate::tensor::{Dual, Matrix, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MetaPart {
    Train,
    Test,
}

/// A pair of losses over a flat parameter vector.
pub trait MetaObjective {
    /// Loss and gradient of `part` at `theta`.
    fn value_and_grad<T: Real>(&self, part: MetaPart, theta: &[T]) -> Result<(T, Vec<T>)>;
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetaGradient {
    pub grad: Vec<f64>,
    pub theta_prime: Vec<f64>,
    pub loss_train: f64,
    pub loss_test: f64,
}

/// `F(θ) = L_tr(θ) + β·L_te(θ − α∇L_tr(θ))`.
pub fn meta_objective_value<O: MetaObjective>(obj: &O, theta: &[f64], alpha: f64, beta: f64) -> Result<f64> {
    let (ltr, gtr) = obj.value_and_grad(MetaPart::Train, theta)?;
    let tp: Vec<f64> = theta.iter().zip(&gtr).map(|(t, g)| t - alpha * g).collect();
    let (lte, _) = obj.value_and_grad(MetaPart::Test, &tp)?;
    Ok(ltr + beta * lte)
}

/// `∇F = g_tr + β(g_te − α·H_tr·g_te)` with `g_te` taken at θ′. The
/// first-order variant drops the Hessian term.
pub fn meta_gradient<O: MetaObjective>(
    obj: &O,
    theta: &[f64],
    alpha: f64,
    beta: f64,
    first_order: bool,
) -> Result<MetaGradient> {
    let (ltr, gtr) = obj.value_and_grad(MetaPart::Train, theta)?;
    let theta_prime: Vec<f64> = theta.iter().zip(&gtr).map(|(t, g)| t - alpha * g).collect();
    let (lte, gte) = obj.value_and_grad(MetaPart::Test, &theta_prime)?;
    let mut grad: Vec<f64> = gtr.iter().zip(&gte).map(|(a, b)| a + beta * b).collect();
    if !first_order && beta != 0.0 {
        let dual: Vec<Dual> = theta.iter().zip(&gte).map(|(&t, &v)| Dual::new(t, v)).collect();
        let (_, g) = obj.value_and_grad(MetaPart::Train, &dual)?;
        for (out, hv) in grad.iter_mut().zip(&g) {
            *out -= beta * alpha * hv.du;
        }
    }
    Ok(MetaGradient {
        grad,
        theta_prime,
        loss_train: ltr,
        loss_test: lte,
    })
}

/// One-parameter probe: `L_tr = (θ − a)²`, `L_te = (θ − b)²`, built on the tape.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalarProbe {
    pub train_target: f64,
    pub test_target: f64,
}

impl ScalarProbe {
    /// `L_tr = θ²`, `L_te = (θ − 1)²`.
    pub fn standard() -> Self {
        Self {
            train_target: 0.0,
            test_target: 1.0,
        }
    }

    /// The same probe with distillation losses `‖θ − t/τ‖²`.
    pub fn distill(train_teacher: f64, test_teacher: f64, tau: f64) -> Self {
        Self {
            train_target: train_teacher / tau,
            test_target: test_teacher / tau,
        }
    }
}

impl MetaObjective for ScalarProbe {
    fn value_and_grad<T: Real>(&self, part: MetaPart, theta: &[T]) -> Result<(T, Vec<T>)> {
        if theta.len() != 1 {
            return Err(Error::ShapeMismatch(format!("scalar probe got {} parameters", theta.len())));
        }
        let target = match part {
            MetaPart::Train => self.train_target,
            MetaPart::Test => self.test_target,
        };
        let mut tape = Tape::<T>::new();
        let x = tape.param(Matrix::from_vec(1, 1, vec![theta[0]]));
        let l = tape.squared_error(x, vec![T::from_f64(target)]);
        let g = tape.backward(l);
        Ok((tape.scalar(l), vec![g.get(x).expect("parameter gradient").get(0, 0)]))
    }
}

/// Encoder objective: meta-train loss is the mean over meta-train domains of
/// each batch's mean span loss; meta-test loss is the held-out batch's mean.
pub struct EncoderMetaObjective<'a> {
    pub template: &'a ParameterSet,
    pub train: Vec<Vec<&'a Window>>,
    pub test: Vec<&'a Window>,
    pub objective: Objective<'a>,
    /// Dropout seed; identical masks are reused for every evaluation of a part.
    pub seed: Option<u64>,
}

impl EncoderMetaObjective<'_> {
    fn batch<T: Real>(&self, values: &[Matrix<T>], windows: &[&Window], seed: Option<u64>) -> Result<(T, Vec<Matrix<T>>)> {
        let trainable = vec![true; values.len()];
        let cfg = &self.template.config;
        let objective = self.objective;
        let (l, _, g) = mean_loss_grads(self.template, values, &trainable, windows, seed, |tape, bound, w, rng| {
            let out = forward_on_tape(tape, bound, cfg, w, rng)?;
            Ok(WindowTerm {
                loss: span_loss(tape, &out, w, objective)?,
                parts: vec![],
            })
        })?;
        Ok((l, g))
    }
}

impl MetaObjective for EncoderMetaObjective<'_> {
    fn value_and_grad<T: Real>(&self, part: MetaPart, theta: &[T]) -> Result<(T, Vec<T>)> {
        let mut off = 0;
        let values: Vec<Matrix<T>> = self
            .template
            .tensors
            .iter()
            .map(|t| {
                let n = t.value.len();
                let m = Matrix::from_vec(t.value.rows(), t.value.cols(), theta[off..off + n].to_vec());
                off += n;
                m
            })
            .collect();
        if off != theta.len() {
            return Err(Error::ShapeMismatch(format!("{} values for {off} parameters", theta.len())));
        }
        let flat = |g: Vec<Matrix<T>>| g.into_iter().flat_map(|m| m.into_vec()).collect::<Vec<T>>();
        match part {
            MetaPart::Test => {
                let (l, g) = self.batch(&values, &self.test, self.seed.map(|s| mix(s, u64::MAX)))?;
                Ok((l, flat(g)))
            }
            MetaPart::Train => {
                let k = self.train.len();
                if k == 0 {
                    return Err(Error::TooFewDomains { needed: 2, got: 1 });
                }
                let mut loss = T::zero();
                let mut grad = vec![T::zero(); theta.len()];
                for (d, windows) in self.train.iter().enumerate() {
                    let (l, g) = self.batch(&values, windows, self.seed.map(|s| mix(s, d as u64)))?;
                    loss += l.scale(1.0 / k as f64);
                    for (a, x) in grad.iter_mut().zip(flat(g)) {
                        *a += x.scale(1.0 / k as f64);
                    }
                }
                Ok((loss, grad))
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct MldgStep {
    pub grads: Grads,
    pub meta_test: String,
    pub loss_train: f64,
    pub loss_test: f64,
}

/// One meta-step over per-domain batches: a uniformly chosen domain is
/// meta-test, the rest meta-train.
#[allow(clippy::too_many_arguments)]
pub fn mldg_step(
    params: &ParameterSet,
    batches: &[Batch<'_>],
    objective: Objective,
    alpha: f64,
    beta: f64,
    first_order: bool,
    rng: &mut ChaCha8Rng,
    dropout_seed: Option<u64>,
) -> Result<MldgStep> {
    if batches.len() < 2 {
        return Err(Error::TooFewDomains {
            needed: 2,
            got: batches.len(),
        });
    }
    let held = rng.gen_range(0..batches.len());
    let obj = EncoderMetaObjective {
        template: params,
        train: batches
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != held)
            .map(|(_, b)| b.windows.clone())
            .collect(),
        test: batches[held].windows.clone(),
        objective,
        seed: dropout_seed,
    };
    let mg = meta_gradient(&obj, &params.to_flat(), alpha, beta, first_order)?;
    Ok(MldgStep {
        grads: grads_from_flat(params, &mg.grad),
        meta_test: batches[held].domain.to_string(),
        loss_train: mg.loss_train,
        loss_test: mg.loss_test,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trainers::testutil::{assert_fd, tiny_config, tiny_windows};

    #[test]
    fn scalar_probe_closed_form() {
        let p = ScalarProbe::standard();
        let mg = meta_gradient(&p, &[1.0], 0.1, 1.0, false).unwrap();
        assert!((mg.theta_prime[0] - 0.8).abs() < 1e-12);
        assert!((meta_objective_value(&p, &[1.0], 0.1, 1.0).unwrap() - 1.04).abs() < 1e-12);
        assert!((mg.grad[0] - 1.68).abs() < 1e-9);
        let fo = meta_gradient(&p, &[1.0], 0.1, 1.0, true).unwrap();
        // 2θ + β·2(θ′ − 1)
        assert!((fo.grad[0] - 1.6).abs() < 1e-12);
        let h = 1e-6;
        let fd = (meta_objective_value(&p, &[1.0 + h], 0.1, 1.0).unwrap()
            - meta_objective_value(&p, &[1.0 - h], 0.1, 1.0).unwrap())
            / (2.0 * h);
        assert!((fd - 1.68).abs() < 1e-7);
    }

    #[test]
    fn beta_zero_is_plain_train_gradient() {
        let p = ScalarProbe::standard();
        let mg = meta_gradient(&p, &[0.7], 0.1, 0.0, false).unwrap();
        assert_eq!(mg.grad, vec![1.4]);
    }

    #[test]
    fn distill_probe_matches_finite_differences() {
        let p = ScalarProbe::distill(3.0, -2.0, 4.0);
        let g = meta_gradient(&p, &[0.2], 0.3, 1.0, false).unwrap().grad[0];
        let h = 1e-6;
        let fd = (meta_objective_value(&p, &[0.2 + h], 0.3, 1.0).unwrap()
            - meta_objective_value(&p, &[0.2 - h], 0.3, 1.0).unwrap())
            / (2.0 * h);
        assert!((g - fd).abs() < 1e-7);
    }

    fn encoder_objective<'a>(p: &'a ParameterSet, ws: &'a [Window]) -> EncoderMetaObjective<'a> {
        EncoderMetaObjective {
            template: p,
            train: vec![vec![&ws[0], &ws[2]]],
            test: vec![&ws[1]],
            objective: Objective::Gold,
            seed: None,
        }
    }

    #[test]
    fn encoder_meta_gradient_matches_finite_differences() {
        let p = ParameterSet::init(&tiny_config(), 0, 11).unwrap();
        let ws = tiny_windows();
        let obj = encoder_objective(&p, &ws);
        let theta = p.to_flat();
        let (alpha, beta) = (0.05, 1.0);
        let full = meta_gradient(&obj, &theta, alpha, beta, false).unwrap();
        let f = |th: &[f64]| meta_objective_value(&obj, th, alpha, beta).unwrap();
        assert_fd(&f, &theta, &full.grad, 1e-3);
        let fo = meta_gradient(&obj, &theta, alpha, beta, true).unwrap();
        let diff: f64 = full.grad.iter().zip(&fo.grad).map(|(a, b)| (a - b).abs()).sum();
        assert!(diff > 1e-6);
    }

    #[test]
    fn vanishing_inner_step_reduces_to_summed_gradient() {
        let p = ParameterSet::init(&tiny_config(), 0, 12).unwrap();
        let ws = tiny_windows();
        let obj = encoder_objective(&p, &ws);
        let theta = p.to_flat();
        let mg = meta_gradient(&obj, &theta, 1e-8, 1.0, false).unwrap();
        let (_, a) = obj.value_and_grad(MetaPart::Train, &theta).unwrap();
        let (_, b) = obj.value_and_grad(MetaPart::Test, &theta).unwrap();
        for ((g, x), y) in mg.grad.iter().zip(&a).zip(&b) {
            assert!((g - (x + y)).abs() < 1e-4);
        }
    }
}

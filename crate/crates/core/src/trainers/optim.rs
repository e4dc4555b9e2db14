use super::config::OptimizerConfig;
use crate::model::{Grads, ParameterSet};
use crate::tensor::Matrix;

/// Learning-rate multiplier: linear warmup over the first `warmup` steps,
/// then linear decay to zero at `total`.
pub fn lr_factor(step: usize, total: usize, warmup: usize) -> f64 {
    if warmup > 0 && step < warmup {
        return (step + 1) as f64 / warmup as f64;
    }
    let rest = total.saturating_sub(warmup).max(1);
    let done = step.saturating_sub(warmup);
    (1.0 - done as f64 / rest as f64).max(0.0)
}

pub struct Optimizer {
    config: OptimizerConfig,
    lr: f64,
    total_steps: usize,
    step: usize,
    m: Grads,
    v: Grads,
}

impl Optimizer {
    pub fn new(config: OptimizerConfig, lr: f64, total_steps: usize, params: &ParameterSet) -> Self {
        Self {
            config,
            lr,
            total_steps: total_steps.max(1),
            step: 0,
            m: params.zero_grads(),
            v: params.zero_grads(),
        }
    }

    /// Learning rate for the next step.
    pub fn current_lr(&self) -> f64 {
        match self.config {
            OptimizerConfig::AdamW { warmup_frac, .. } => {
                let warmup = (warmup_frac * self.total_steps as f64).round() as usize;
                self.lr * lr_factor(self.step, self.total_steps, warmup)
            }
            OptimizerConfig::Sgd => self.lr,
        }
    }

    /// Applies one update and returns the learning rate used.
    pub fn step(&mut self, params: &mut ParameterSet, grads: &Grads) -> f64 {
        let lr = self.current_lr();
        self.step += 1;
        match self.config {
            OptimizerConfig::Sgd => {
                for (p, g) in params.tensors.iter_mut().zip(grads) {
                    for (x, &d) in p.value.data_mut().iter_mut().zip(g.data()) {
                        *x -= lr * d;
                    }
                }
            }
            OptimizerConfig::AdamW {
                beta1,
                beta2,
                eps,
                weight_decay,
                ..
            } => {
                let t = self.step as i32;
                let c1 = 1.0 - beta1.powi(t);
                let c2 = 1.0 - beta2.powi(t);
                for ((p, g), (m, v)) in params
                    .tensors
                    .iter_mut()
                    .zip(grads)
                    .zip(self.m.iter_mut().zip(self.v.iter_mut()))
                {
                    // no decay on biases and layer-norm gains
                    let decay = if is_vector(&p.value) { 0.0 } else { weight_decay };
                    let it = p.value.data_mut().iter_mut().zip(g.data());
                    for ((x, &d), (mi, vi)) in it.zip(m.data_mut().iter_mut().zip(v.data_mut().iter_mut())) {
                        *mi = beta1 * *mi + (1.0 - beta1) * d;
                        *vi = beta2 * *vi + (1.0 - beta2) * d * d;
                        let mhat = *mi / c1;
                        let vhat = *vi / c2;
                        *x -= lr * (mhat / (vhat.sqrt() + eps) + decay * *x);
                    }
                }
            }
        }
        lr
    }
}

fn is_vector(m: &Matrix) -> bool {
    m.rows() == 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::EncoderConfig;

    #[test]
    fn schedule_shape() {
        let f: Vec<f64> = (0..10).map(|s| lr_factor(s, 10, 2)).collect();
        assert_eq!(f[0], 0.5);
        assert_eq!(f[1], 1.0);
        assert_eq!(f[2], 1.0);
        assert!((f[9] - 0.125).abs() < 1e-12);
        assert!(f.windows(2).skip(1).all(|w| w[1] <= w[0]));
        assert_eq!(lr_factor(0, 1, 0), 1.0);
    }

    #[test]
    fn first_adam_step_moves_by_lr_times_sign() {
        let cfg = EncoderConfig {
            vocab_size: 6,
            num_layers: 1,
            hidden_dim: 4,
            num_heads: 1,
            ffn_dim: 4,
            max_len: 4,
            dropout: 0.0,
            init_std: 0.02,
        };
        let mut p = ParameterSet::init(&cfg, 0, 1).unwrap();
        let before = p.clone();
        let mut g = p.zero_grads();
        g[0].data_mut()[0] = 3.0;
        g[0].data_mut()[1] = -0.5;
        let oc = OptimizerConfig::AdamW {
            beta1: 0.9,
            beta2: 0.999,
            eps: 0.0,
            weight_decay: 0.0,
            warmup_frac: 0.0,
        };
        let mut opt = Optimizer::new(oc, 0.01, 10, &p);
        assert_eq!(opt.step(&mut p, &g), 0.01);
        let d0 = p.tensors[0].value.data()[0] - before.tensors[0].value.data()[0];
        let d1 = p.tensors[0].value.data()[1] - before.tensors[0].value.data()[1];
        assert!((d0 + 0.01).abs() < 1e-12 && (d1 - 0.01).abs() < 1e-12);
    }
}

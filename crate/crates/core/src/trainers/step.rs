//! Batch-level loss and gradient evaluation shared by all trainers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::losses::{span_loss, Objective};
use crate::autograd::{Tape, Var};
use crate::data::Window;
use crate::error::Result;
use crate::model::{forward_on_tape, Bound, Grads, ParameterSet};
use crate::tensor::{Matrix, Real};

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent stream seed from `seed` and a tag.
pub fn mix(seed: u64, tag: u64) -> u64 {
    splitmix64(seed ^ splitmix64(tag))
}

/// Loss node plus named scalar components for one window.
pub(crate) struct WindowTerm {
    pub loss: Var,
    pub parts: Vec<Var>,
}

/// Mean over `windows` of a per-window loss built by `build`, and its gradient
/// with respect to every trainable tensor. `values[i]` is placed on the tape
/// for tensor `i` (as a constant where `trainable[i]` is false). Dropout is
/// active when `seed` is given, with one stream per window.
pub(crate) fn mean_loss_grads<T: Real>(
    params: &ParameterSet,
    values: &[Matrix<T>],
    trainable: &[bool],
    windows: &[&Window],
    seed: Option<u64>,
    mut build: impl FnMut(&mut Tape<T>, &Bound, &Window, Option<&mut ChaCha8Rng>) -> Result<WindowTerm>,
) -> Result<(T, Vec<f64>, Vec<Matrix<T>>)> {
    let n = windows.len().max(1) as f64;
    let mut loss = T::zero();
    let mut parts: Vec<f64> = Vec::new();
    let mut grads: Vec<Matrix<T>> = values.iter().map(|m| Matrix::zeros(m.rows(), m.cols())).collect();
    for (i, w) in windows.iter().enumerate() {
        let mut tape = Tape::<T>::new();
        let bound = params.bind_with(&mut tape, |k, _| (values[k].clone(), trainable[k]));
        let mut rng = seed.map(|s| ChaCha8Rng::seed_from_u64(mix(s, i as u64)));
        let term = build(&mut tape, &bound, w, rng.as_mut())?;
        loss += tape.scalar(term.loss).scale(1.0 / n);
        if parts.is_empty() {
            parts = vec![0.0; term.parts.len()];
        }
        for (p, &v) in parts.iter_mut().zip(&term.parts) {
            *p += tape.scalar(v).value() / n;
        }
        let g = tape.backward(term.loss);
        for (acc, &v) in grads.iter_mut().zip(&bound.vars) {
            if let Some(d) = g.get(v) {
                for (a, &x) in acc.data_mut().iter_mut().zip(d.data()) {
                    *a += x.scale(1.0 / n);
                }
            }
        }
    }
    Ok((loss, parts, grads))
}

pub(crate) fn values_of(params: &ParameterSet) -> Vec<Matrix> {
    params.tensors.iter().map(|t| t.value.clone()).collect()
}

/// Mean span loss over a batch and its gradient.
pub fn batch_span_grads(
    params: &ParameterSet,
    windows: &[&Window],
    objective: Objective,
    seed: Option<u64>,
) -> Result<(f64, Grads)> {
    let values = values_of(params);
    let trainable = vec![true; values.len()];
    let cfg = &params.config;
    let (loss, _, grads) = mean_loss_grads(params, &values, &trainable, windows, seed, |tape, bound, w, rng| {
        let out = forward_on_tape(tape, bound, cfg, w, rng)?;
        let loss = span_loss(tape, &out, w, objective)?;
        Ok(WindowTerm { loss, parts: vec![] })
    })?;
    Ok((loss, grads))
}

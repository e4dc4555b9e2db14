//! Post-layer-norm transformer encoder (BERT layout) on the autodiff tape.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::params::*;
use super::{EncoderConfig, ParameterSet, SpanLogits};
use crate::autograd::{Tape, Var};
use crate::data::Window;
use crate::error::{Error, Result};
use crate::tensor::Real;

pub struct ForwardOutput {
    pub hidden: Var,
    pub start: Var,
    pub end: Var,
}

fn dropout<T: Real>(tape: &mut Tape<T>, x: Var, p: f64, rng: Option<&mut ChaCha8Rng>) -> Var {
    match rng {
        Some(rng) if p > 0.0 => {
            let keep = 1.0 / (1.0 - p);
            let n = tape.value(x).len();
            let mask = (0..n).map(|_| if rng.gen::<f64>() < p { 0.0 } else { keep }).collect();
            tape.mask_scale(x, mask)
        }
        _ => x,
    }
}

fn affine_norm<T: Real>(tape: &mut Tape<T>, x: Var, g: Var, b: Var) -> Var {
    let n = tape.layer_norm(x);
    let n = tape.mul_row(n, g);
    tape.add_row(n, b)
}

fn linear<T: Real>(tape: &mut Tape<T>, x: Var, w: Var, b: Var) -> Var {
    let y = tape.matmul(x, w);
    tape.add_row(y, b)
}

/// Final-layer hidden states (`ids.len() x d`). Only the first `key_len`
/// positions are attended to. Passing `rng` enables dropout (training mode).
pub fn encode<T: Real>(
    tape: &mut Tape<T>,
    bound: &Bound,
    cfg: &EncoderConfig,
    ids: &[usize],
    key_len: usize,
    mut rng: Option<&mut ChaCha8Rng>,
) -> Result<Var> {
    let n = ids.len();
    if n == 0 || n > cfg.max_len {
        return Err(Error::ShapeMismatch(format!("window of {n} tokens, max_len {}", cfg.max_len)));
    }
    if key_len == 0 || key_len > n {
        return Err(Error::ShapeMismatch(format!("{key_len} attended positions of {n}")));
    }
    if let Some(&bad) = ids.iter().find(|&&id| id >= cfg.vocab_size) {
        return Err(Error::ShapeMismatch(format!("token id {bad} outside vocabulary of {}", cfg.vocab_size)));
    }
    let positions: Vec<usize> = (0..n).collect();
    let tok = tape.embed(bound.emb(TOK), ids);
    let pos = tape.embed(bound.emb(POS), &positions);
    let x = tape.add(tok, pos);
    let x = affine_norm(tape, x, bound.emb(EMB_LN_G), bound.emb(EMB_LN_B));
    let mut x = dropout(tape, x, cfg.dropout, rng.as_deref_mut());

    let dh = cfg.head_dim();
    let scale = 1.0 / (dh as f64).sqrt();
    for l in 0..cfg.num_layers {
        let p = |k| bound.block(l, k);
        let q = linear(tape, x, p(WQ), p(BQ));
        let k = linear(tape, x, p(WK), p(BK));
        let v = linear(tape, x, p(WV), p(BV));
        let mut heads = Vec::with_capacity(cfg.num_heads);
        for h in 0..cfg.num_heads {
            let qh = tape.slice_cols(q, h * dh, dh);
            let kh = tape.slice_cols(k, h * dh, dh);
            let vh = tape.slice_cols(v, h * dh, dh);
            let scores = tape.matmul_bt(qh, kh);
            let scores = tape.scale(scores, scale);
            let probs = tape.softmax_rows(scores, key_len);
            heads.push(tape.matmul(probs, vh));
        }
        let ctx = if heads.len() == 1 { heads[0] } else { tape.concat_cols(&heads) };
        let attn = linear(tape, ctx, p(WO), p(BO));
        let attn = dropout(tape, attn, cfg.dropout, rng.as_deref_mut());
        let res = tape.add(x, attn);
        x = affine_norm(tape, res, p(LN1_G), p(LN1_B));

        let h1 = linear(tape, x, p(W1), p(B1));
        let h1 = tape.gelu(h1);
        let h2 = linear(tape, h1, p(W2), p(B2));
        let h2 = dropout(tape, h2, cfg.dropout, rng.as_deref_mut());
        let res = tape.add(x, h2);
        x = affine_norm(tape, res, p(LN2_G), p(LN2_B));
    }
    Ok(x)
}

/// Start and end logit columns (`n x 1` each) from hidden states.
pub fn span_heads<T: Real>(tape: &mut Tape<T>, bound: &Bound, hidden: Var) -> (Var, Var) {
    let logits = linear(tape, hidden, bound.span_w(), bound.span_b());
    let start = tape.slice_cols(logits, 0, 1);
    let end = tape.slice_cols(logits, 1, 1);
    (start, end)
}

/// Full span forward over the non-padding prefix of `window`.
pub fn forward_on_tape<T: Real>(
    tape: &mut Tape<T>,
    bound: &Bound,
    cfg: &EncoderConfig,
    window: &Window,
    rng: Option<&mut ChaCha8Rng>,
) -> Result<ForwardOutput> {
    let ids = &window.token_ids[..window.num_tokens];
    let hidden = encode(tape, bound, cfg, ids, ids.len(), rng)?;
    let (start, end) = span_heads(tape, bound, hidden);
    Ok(ForwardOutput { hidden, start, end })
}

/// Masked mean of hidden states over the first `count` rows.
pub fn pooled_on_tape<T: Real>(tape: &mut Tape<T>, hidden: Var, count: usize) -> Var {
    tape.masked_mean_rows(hidden, count)
}

/// Domain-classifier logits (`1 x num_domains`) for a pooled row.
pub fn domain_logits<T: Real>(tape: &mut Tape<T>, bound: &Bound, pooled: Var) -> Result<Var> {
    let (w, b) = bound
        .domain_head()
        .ok_or_else(|| Error::InvalidArgument("model has no domain classifier head".into()))?;
    Ok(linear(tape, pooled, w, b))
}

fn column(tape: &Tape<f64>, v: Var) -> Vec<f64> {
    tape.value(v).data().to_vec()
}

/// Eval-mode logits over every position of the (padded) window. Padding
/// positions are scored too but never attended to.
pub fn forward_span(params: &ParameterSet, window: &Window) -> Result<SpanLogits> {
    let mut tape = Tape::<f64>::new();
    let bound = params.bind(&mut tape);
    let hidden = encode(&mut tape, &bound, &params.config, &window.token_ids, window.num_tokens, None)?;
    let (s, e) = span_heads(&mut tape, &bound, hidden);
    Ok(SpanLogits {
        start: column(&tape, s),
        end: column(&tape, e),
    })
}

/// Eval-mode logits over the non-padding tokens only. Equal to the
/// corresponding prefix of [`forward_span`].
pub fn span_logits(params: &ParameterSet, window: &Window) -> Result<SpanLogits> {
    let mut tape = Tape::<f64>::new();
    let bound = params.bind(&mut tape);
    let out = forward_on_tape(&mut tape, &bound, &params.config, window, None)?;
    Ok(SpanLogits {
        start: column(&tape, out.start),
        end: column(&tape, out.end),
    })
}

/// Masked mean of final-layer states over non-padding positions.
pub fn pooled_repr(params: &ParameterSet, window: &Window) -> Result<Vec<f64>> {
    let mut tape = Tape::<f64>::new();
    let bound = params.bind(&mut tape);
    let hidden = encode(&mut tape, &bound, &params.config, &window.token_ids, window.num_tokens, None)?;
    let pooled = pooled_on_tape(&mut tape, hidden, window.num_tokens);
    Ok(column(&tape, pooled))
}

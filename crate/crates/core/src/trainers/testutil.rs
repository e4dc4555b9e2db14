//! Small fixtures for gradient checks.

use crate::data::Window;
use crate::model::EncoderConfig;

/// d = 8, two layers, under 1k parameters.
pub(crate) fn tiny_config() -> EncoderConfig {
    EncoderConfig {
        vocab_size: 10,
        num_layers: 2,
        hidden_dim: 8,
        num_heads: 2,
        ffn_dim: 4,
        max_len: 8,
        dropout: 0.0,
        init_std: 0.5,
    }
}

pub(crate) fn window(id: &str, domain: &str, passage: &[usize], labels: (usize, usize)) -> Window {
    let mut ids = vec![2, 4, 3];
    let p0 = ids.len();
    ids.extend_from_slice(passage);
    let p1 = ids.len();
    ids.push(3);
    let n = ids.len();
    ids.resize(8, 0);
    Window {
        window_id: format!("{id}#0"),
        qid: id.to_string(),
        domain: domain.to_string(),
        token_ids: ids,
        num_tokens: n,
        question_span: (1, 2),
        passage_span: (p0, p1),
        passage_offsets: (0..passage.len()).map(|i| (2 * i, 2 * i + 1)).collect(),
        start_label: Some(labels.0),
        end_label: Some(labels.1),
    }
}

pub(crate) fn tiny_windows() -> Vec<Window> {
    vec![
        window("a", "A", &[5, 6, 7], (4, 5)),
        window("b", "B", &[8, 9, 5, 6], (3, 3)),
        window("c", "A", &[7, 7], (4, 4)),
    ]
}

/// Central differences of `f` at `x` against `grad`, as relative error of the
/// whole vector.
pub(crate) fn assert_fd(f: &dyn Fn(&[f64]) -> f64, x: &[f64], grad: &[f64], tol: f64) {
    let h = 1e-5;
    let mut fd = vec![0.0; x.len()];
    let mut y = x.to_vec();
    for i in 0..x.len() {
        y[i] = x[i] + h;
        let a = f(&y);
        y[i] = x[i] - h;
        let b = f(&y);
        y[i] = x[i];
        fd[i] = (a - b) / (2.0 * h);
    }
    let err: f64 = fd.iter().zip(grad).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    let norm: f64 = fd.iter().map(|a| a * a).sum::<f64>().sqrt();
    assert!(norm > 1e-8, "degenerate probe: zero gradient");
    assert!(err / norm < tol, "relative error {} (norm {norm})", err / norm);
}

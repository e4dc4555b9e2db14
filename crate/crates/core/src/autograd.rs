//! A small reverse-mode autodiff tape over [`Matrix`] values.
//!
//! Every op records its inputs; [`Tape::backward`] walks the record in
//! reverse and accumulates adjoints. The tape is generic over [`Real`], so
//! running it with [`crate::tensor::Dual`] parameters gives forward-over-reverse
//! Hessian-vector products for free.

use crate::tensor::{Matrix, Real};

/// Handle to a node on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Debug)]
enum Op<T> {
    Leaf,
    MatMul(Var, Var),
    MatMulBt(Var, Var),
    Add(Var, Var),
    AddRow(Var, Var),
    MulRow(Var, Var),
    Scale(Var, f64),
    Gelu(Var),
    LayerNorm { input: Var, inv_std: Vec<T> },
    Softmax { input: Var, key_len: usize },
    SliceCols { input: Var, start: usize },
    ConcatCols(Vec<Var>),
    Embed { table: Var, ids: Vec<usize> },
    MaskedMeanRows { input: Var, count: usize },
    CrossEntropy { input: Var, target: usize, len: usize },
    SquaredError { input: Var, target: Vec<T> },
    GradReverse { input: Var, lambda: f64 },
    MaskScale { input: Var, mask: Vec<f64> },
}

struct Node<T> {
    value: Matrix<T>,
    op: Op<T>,
    requires_grad: bool,
}

const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)
const GELU_A: f64 = 0.044_715;
const LN_EPS: f64 = 1e-5;

/// Adjoints produced by [`Tape::backward`], indexed by [`Var`].
pub struct Gradients<T> {
    grads: Vec<Option<Matrix<T>>>,
}

impl<T: Real> Gradients<T> {
    pub fn get(&self, v: Var) -> Option<&Matrix<T>> {
        self.grads[v.0].as_ref()
    }

    pub fn take(&mut self, v: Var) -> Option<Matrix<T>> {
        self.grads[v.0].take()
    }
}

pub struct Tape<T: Real> {
    nodes: Vec<Node<T>>,
}

impl<T: Real> Default for Tape<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> Tape<T> {
    pub fn new() -> Self {
        Self {
            nodes: Vec::with_capacity(256),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Matrix<T> {
        &self.nodes[v.0].value
    }

    pub fn scalar(&self, v: Var) -> T {
        self.nodes[v.0].value.data()[0]
    }

    fn push(&mut self, value: Matrix<T>, op: Op<T>, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn rg(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    /// A trainable input.
    pub fn param(&mut self, value: Matrix<T>) -> Var {
        self.push(value, Op::Leaf, true)
    }

    /// An input that never receives a gradient.
    pub fn constant(&mut self, value: Matrix<T>) -> Var {
        self.push(value, Op::Leaf, false)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a).matmul(self.value(b));
        let rg = self.rg(a) || self.rg(b);
        self.push(v, Op::MatMul(a, b), rg)
    }

    /// `a · bᵀ`
    pub fn matmul_bt(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a).matmul_bt(self.value(b));
        let rg = self.rg(a) || self.rg(b);
        self.push(v, Op::MatMulBt(a, b), rg)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a).zip_map(self.value(b), |x, y| x + y);
        let rg = self.rg(a) || self.rg(b);
        self.push(v, Op::Add(a, b), rg)
    }

    /// Adds a `1 x cols` row to every row of `a`.
    pub fn add_row(&mut self, a: Var, row: Var) -> Var {
        let r = self.value(row);
        assert_eq!(r.rows(), 1);
        assert_eq!(r.cols(), self.value(a).cols());
        let mut v = self.value(a).clone();
        let r = self.value(row).data().to_vec();
        for i in 0..v.rows() {
            for (x, &b) in v.row_mut(i).iter_mut().zip(&r) {
                *x += b;
            }
        }
        let rg = self.rg(a) || self.rg(row);
        self.push(v, Op::AddRow(a, row), rg)
    }

    /// Multiplies every row of `a` elementwise by a `1 x cols` row.
    pub fn mul_row(&mut self, a: Var, row: Var) -> Var {
        assert_eq!(self.value(row).rows(), 1);
        let r = self.value(row).data().to_vec();
        let mut v = self.value(a).clone();
        for i in 0..v.rows() {
            for (x, &b) in v.row_mut(i).iter_mut().zip(&r) {
                *x = *x * b;
            }
        }
        let rg = self.rg(a) || self.rg(row);
        self.push(v, Op::MulRow(a, row), rg)
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let v = self.value(a).map(|x| x.scale(c));
        let rg = self.rg(a);
        self.push(v, Op::Scale(a, c), rg)
    }

    /// Tanh-approximated GELU.
    pub fn gelu(&mut self, a: Var) -> Var {
        let v = self.value(a).map(|x| {
            let inner = (x + x * x * x.scale(GELU_A)).scale(GELU_C);
            x.scale(0.5) * (T::one() + inner.tanh())
        });
        let rg = self.rg(a);
        self.push(v, Op::Gelu(a), rg)
    }

    /// Per-row normalization to zero mean and unit variance (no affine part).
    pub fn layer_norm(&mut self, a: Var) -> Var {
        let x = self.value(a);
        let (n, d) = x.shape();
        let mut out = Matrix::zeros(n, d);
        let mut inv_std = Vec::with_capacity(n);
        let inv_d = 1.0 / d as f64;
        for i in 0..n {
            let row = x.row(i);
            let mut mean = T::zero();
            for &v in row {
                mean += v;
            }
            let mean = mean.scale(inv_d);
            let mut var = T::zero();
            for &v in row {
                let c = v - mean;
                var += c * c;
            }
            let var = var.scale(inv_d);
            let is = T::one() / (var + T::from_f64(LN_EPS)).sqrt();
            for (o, &v) in out.row_mut(i).iter_mut().zip(row) {
                *o = (v - mean) * is;
            }
            inv_std.push(is);
        }
        let rg = self.rg(a);
        self.push(out, Op::LayerNorm { input: a, inv_std }, rg)
    }

    /// Row softmax over the first `key_len` columns; later columns get probability 0.
    pub fn softmax_rows(&mut self, a: Var, key_len: usize) -> Var {
        let x = self.value(a);
        let (n, m) = x.shape();
        assert!(key_len >= 1 && key_len <= m);
        let mut out = Matrix::zeros(n, m);
        for i in 0..n {
            let row = &x.row(i)[..key_len];
            let mx = row
                .iter()
                .map(|v| v.value())
                .fold(f64::NEG_INFINITY, f64::max);
            let mx = T::from_f64(mx);
            let mut z = T::zero();
            let o = out.row_mut(i);
            for (j, &v) in row.iter().enumerate() {
                let e = (v - mx).exp();
                o[j] = e;
                z += e;
            }
            let inv = T::one() / z;
            for v in o[..key_len].iter_mut() {
                *v = *v * inv;
            }
        }
        let rg = self.rg(a);
        self.push(out, Op::Softmax { input: a, key_len }, rg)
    }

    pub fn slice_cols(&mut self, a: Var, start: usize, len: usize) -> Var {
        let x = self.value(a);
        assert!(start + len <= x.cols());
        let mut out = Matrix::zeros(x.rows(), len);
        for i in 0..x.rows() {
            out.row_mut(i).copy_from_slice(&x.row(i)[start..start + len]);
        }
        let rg = self.rg(a);
        self.push(out, Op::SliceCols { input: a, start }, rg)
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Var {
        let rows = self.value(parts[0]).rows();
        let cols: usize = parts.iter().map(|&p| self.value(p).cols()).sum();
        let mut out = Matrix::zeros(rows, cols);
        let mut off = 0;
        for &p in parts {
            let x = self.value(p);
            assert_eq!(x.rows(), rows);
            for i in 0..rows {
                out.row_mut(i)[off..off + x.cols()].copy_from_slice(x.row(i));
            }
            off += x.cols();
        }
        let rg = parts.iter().any(|&p| self.rg(p));
        self.push(out, Op::ConcatCols(parts.to_vec()), rg)
    }

    /// Row lookup: output row `r` is `table[ids[r]]`.
    pub fn embed(&mut self, table: Var, ids: &[usize]) -> Var {
        let t = self.value(table);
        let mut out = Matrix::zeros(ids.len(), t.cols());
        for (r, &id) in ids.iter().enumerate() {
            out.row_mut(r).copy_from_slice(t.row(id));
        }
        let rg = self.rg(table);
        self.push(
            out,
            Op::Embed {
                table,
                ids: ids.to_vec(),
            },
            rg,
        )
    }

    /// Mean of the first `count` rows, as a `1 x cols` row.
    pub fn masked_mean_rows(&mut self, a: Var, count: usize) -> Var {
        let x = self.value(a);
        assert!(count >= 1 && count <= x.rows());
        let mut out = Matrix::zeros(1, x.cols());
        for i in 0..count {
            for (o, &v) in out.row_mut(0).iter_mut().zip(x.row(i)) {
                *o += v;
            }
        }
        let inv = 1.0 / count as f64;
        let out = out.map(|v: T| v.scale(inv));
        let rg = self.rg(a);
        self.push(out, Op::MaskedMeanRows { input: a, count }, rg)
    }

    /// Negative log-likelihood of `target` under a softmax over the first
    /// `len` entries of `a` (viewed as a flat vector).
    pub fn cross_entropy(&mut self, a: Var, target: usize, len: usize) -> Var {
        let x = &self.value(a).data()[..len];
        assert!(target < len, "cross-entropy target outside scored range");
        let mx = x.iter().map(|v| v.value()).fold(f64::NEG_INFINITY, f64::max);
        let mx = T::from_f64(mx);
        let mut z = T::zero();
        for &v in x {
            z += (v - mx).exp();
        }
        let loss = z.ln() + mx - x[target];
        let rg = self.rg(a);
        self.push(
            Matrix::from_vec(1, 1, vec![loss]),
            Op::CrossEntropy {
                input: a,
                target,
                len,
            },
            rg,
        )
    }

    /// `Σ_i (a_i − target_i)²` over the first `target.len()` entries of `a`.
    pub fn squared_error(&mut self, a: Var, target: Vec<T>) -> Var {
        let x = &self.value(a).data()[..target.len()];
        let mut loss = T::zero();
        for (&v, &t) in x.iter().zip(&target) {
            let d = v - t;
            loss += d * d;
        }
        let rg = self.rg(a);
        self.push(
            Matrix::from_vec(1, 1, vec![loss]),
            Op::SquaredError { input: a, target },
            rg,
        )
    }

    /// Identity forward; the backward pass multiplies the adjoint by `-lambda`.
    pub fn grad_reverse(&mut self, a: Var, lambda: f64) -> Var {
        let v = self.value(a).clone();
        let rg = self.rg(a);
        self.push(v, Op::GradReverse { input: a, lambda }, rg)
    }

    /// Elementwise scaling by a fixed mask (dropout).
    pub fn mask_scale(&mut self, a: Var, mask: Vec<f64>) -> Var {
        let x = self.value(a);
        assert_eq!(x.len(), mask.len());
        let mut v = x.clone();
        for (o, &m) in v.data_mut().iter_mut().zip(&mask) {
            *o = o.scale(m);
        }
        let rg = self.rg(a);
        self.push(v, Op::MaskScale { input: a, mask }, rg)
    }

    /// Reverse sweep from a `1 x 1` node.
    pub fn backward(&self, loss: Var) -> Gradients<T> {
        assert_eq!(self.value(loss).shape(), (1, 1), "backward needs a scalar");
        let mut grads: Vec<Option<Matrix<T>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Matrix::filled(1, 1, T::one()));
        for idx in (0..=loss.0).rev() {
            let node = &self.nodes[idx];
            if !node.requires_grad {
                continue;
            }
            let Some(g) = grads[idx].take() else { continue };
            self.backprop_node(idx, &g, &mut grads);
            grads[idx] = Some(g);
        }
        Gradients { grads }
    }

    fn backprop_node(&self, idx: usize, g: &Matrix<T>, grads: &mut [Option<Matrix<T>>]) {
        let node = &self.nodes[idx];
        let mut acc = |v: Var, delta: Matrix<T>| {
            if !self.nodes[v.0].requires_grad {
                return;
            }
            match &mut grads[v.0] {
                Some(existing) => existing.add_assign(&delta),
                slot @ None => *slot = Some(delta),
            }
        };
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                if self.rg(*a) {
                    acc(*a, g.matmul_bt(self.value(*b)));
                }
                if self.rg(*b) {
                    acc(*b, self.value(*a).matmul_at(g));
                }
            }
            Op::MatMulBt(a, b) => {
                // c = a bᵀ: da = g b, db = gᵀ a
                if self.rg(*a) {
                    acc(*a, g.matmul(self.value(*b)));
                }
                if self.rg(*b) {
                    acc(*b, g.matmul_at(self.value(*a)));
                }
            }
            Op::Add(a, b) => {
                acc(*a, g.clone());
                acc(*b, g.clone());
            }
            Op::AddRow(a, row) => {
                acc(*a, g.clone());
                if self.rg(*row) {
                    let mut r = Matrix::zeros(1, g.cols());
                    for i in 0..g.rows() {
                        for (o, &v) in r.row_mut(0).iter_mut().zip(g.row(i)) {
                            *o += v;
                        }
                    }
                    acc(*row, r);
                }
            }
            Op::MulRow(a, row) => {
                let rv = self.value(*row);
                if self.rg(*a) {
                    let mut da = g.clone();
                    for i in 0..da.rows() {
                        for (o, &s) in da.row_mut(i).iter_mut().zip(rv.data()) {
                            *o = *o * s;
                        }
                    }
                    acc(*a, da);
                }
                if self.rg(*row) {
                    let av = self.value(*a);
                    let mut dr = Matrix::zeros(1, g.cols());
                    for i in 0..g.rows() {
                        for ((o, &gv), &x) in dr.row_mut(0).iter_mut().zip(g.row(i)).zip(av.row(i))
                        {
                            *o += gv * x;
                        }
                    }
                    acc(*row, dr);
                }
            }
            Op::Scale(a, c) => acc(*a, g.map(|v| v.scale(*c))),
            Op::Gelu(a) => {
                let x = self.value(*a);
                let d = x.zip_map(g, |x, gv| {
                    let x2 = x * x;
                    let t = (x + x2 * x.scale(GELU_A)).scale(GELU_C).tanh();
                    let dt = (T::one() - t * t)
                        * (T::one() + x2.scale(3.0 * GELU_A)).scale(GELU_C);
                    gv * ((T::one() + t).scale(0.5) + x.scale(0.5) * dt)
                });
                acc(*a, d);
            }
            Op::LayerNorm { input, inv_std } => {
                let y = &node.value;
                let (n, d) = y.shape();
                let inv_d = 1.0 / d as f64;
                let mut dx = Matrix::zeros(n, d);
                for i in 0..n {
                    let (yr, gr) = (y.row(i), g.row(i));
                    let mut mg = T::zero();
                    let mut mgy = T::zero();
                    for (&yv, &gv) in yr.iter().zip(gr) {
                        mg += gv;
                        mgy += gv * yv;
                    }
                    let mg = mg.scale(inv_d);
                    let mgy = mgy.scale(inv_d);
                    let is = inv_std[i];
                    for ((o, &yv), &gv) in dx.row_mut(i).iter_mut().zip(yr).zip(gr) {
                        *o = is * (gv - mg - yv * mgy);
                    }
                }
                acc(*input, dx);
            }
            Op::Softmax { input, key_len } => {
                let y = &node.value;
                let mut dx = Matrix::zeros(y.rows(), y.cols());
                for i in 0..y.rows() {
                    let yr = &y.row(i)[..*key_len];
                    let gr = &g.row(i)[..*key_len];
                    let mut dot = T::zero();
                    for (&yv, &gv) in yr.iter().zip(gr) {
                        dot += yv * gv;
                    }
                    for ((o, &yv), &gv) in dx.row_mut(i).iter_mut().zip(yr).zip(gr) {
                        *o = yv * (gv - dot);
                    }
                }
                acc(*input, dx);
            }
            Op::SliceCols { input, start } => {
                let x = self.value(*input);
                let mut dx = Matrix::zeros(x.rows(), x.cols());
                for i in 0..x.rows() {
                    dx.row_mut(i)[*start..*start + g.cols()].copy_from_slice(g.row(i));
                }
                acc(*input, dx);
            }
            Op::ConcatCols(parts) => {
                let mut off = 0;
                for &p in parts {
                    let c = self.value(p).cols();
                    if self.rg(p) {
                        let mut dp = Matrix::zeros(g.rows(), c);
                        for i in 0..g.rows() {
                            dp.row_mut(i).copy_from_slice(&g.row(i)[off..off + c]);
                        }
                        acc(p, dp);
                    }
                    off += c;
                }
            }
            Op::Embed { table, ids } => {
                let t = self.value(*table);
                let mut dt = Matrix::zeros(t.rows(), t.cols());
                for (r, &id) in ids.iter().enumerate() {
                    for (o, &v) in dt.row_mut(id).iter_mut().zip(g.row(r)) {
                        *o += v;
                    }
                }
                acc(*table, dt);
            }
            Op::MaskedMeanRows { input, count } => {
                let x = self.value(*input);
                let mut dx = Matrix::zeros(x.rows(), x.cols());
                let inv = 1.0 / *count as f64;
                for i in 0..*count {
                    for (o, &v) in dx.row_mut(i).iter_mut().zip(g.row(0)) {
                        *o = v.scale(inv);
                    }
                }
                acc(*input, dx);
            }
            Op::CrossEntropy { input, target, len } => {
                let x = self.value(*input);
                let xs = &x.data()[..*len];
                let mx = T::from_f64(xs.iter().map(|v| v.value()).fold(f64::NEG_INFINITY, f64::max));
                let mut z = T::zero();
                let exps: Vec<T> = xs
                    .iter()
                    .map(|&v| {
                        let e = (v - mx).exp();
                        z += e;
                        e
                    })
                    .collect();
                let up = g.data()[0];
                let mut dx = Matrix::zeros(x.rows(), x.cols());
                for (j, e) in exps.into_iter().enumerate() {
                    let mut p = e / z;
                    if j == *target {
                        p = p - T::one();
                    }
                    dx.data_mut()[j] = up * p;
                }
                acc(*input, dx);
            }
            Op::SquaredError { input, target } => {
                let x = self.value(*input);
                let up = g.data()[0];
                let mut dx = Matrix::zeros(x.rows(), x.cols());
                for (j, &t) in target.iter().enumerate() {
                    dx.data_mut()[j] = up * (x.data()[j] - t).scale(2.0);
                }
                acc(*input, dx);
            }
            Op::GradReverse { input, lambda } => acc(*input, g.map(|v| v.scale(-*lambda))),
            Op::MaskScale { input, mask } => {
                let mut dx = g.clone();
                for (o, &m) in dx.data_mut().iter_mut().zip(mask) {
                    *o = o.scale(m);
                }
                acc(*input, dx);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(rows: usize, cols: usize, seed: f64) -> Matrix {
        Matrix::from_vec(
            rows,
            cols,
            (0..rows * cols)
                .map(|i| ((i as f64 * 1.3 + seed) * 0.71).sin())
                .collect(),
        )
    }

    /// Checks d(build)/d(input) against central differences for every entry.
    fn check(input: Matrix, build: impl Fn(&mut Tape<f64>, Var) -> Var) {
        let mut tape = Tape::new();
        let x = tape.param(input.clone());
        let out = build(&mut tape, x);
        let grads = tape.backward(out);
        let analytic = grads.get(x).cloned().unwrap_or_else(|| Matrix::zeros(input.rows(), input.cols()));
        let h = 1e-5;
        for k in 0..input.len() {
            let eval = |delta: f64| {
                let mut m = input.clone();
                m.data_mut()[k] += delta;
                let mut t = Tape::new();
                let x = t.param(m);
                let o = build(&mut t, x);
                t.scalar(o)
            };
            let fd = (eval(h) - eval(-h)) / (2.0 * h);
            let an = analytic.data()[k];
            assert!(
                (fd - an).abs() <= 1e-6 * (1.0 + fd.abs()),
                "entry {k}: analytic {an} vs fd {fd}"
            );
        }
    }

    fn reduce(t: &mut Tape<f64>, v: Var) -> Var {
        // weighted sum via a fixed projection so every entry matters differently
        let (r, c) = t.value(v).shape();
        let w = t.constant(sample(c, 1, 9.0));
        let p = t.matmul(v, w);
        let ones = t.constant(Matrix::filled(1, r, 1.0));
        let s = t.matmul(ones, p);
        let mut q = t.scale(s, 0.5);
        q = t.mul_row(q, s);
        q
    }

    #[test]
    fn elementwise_and_matrix_ops_match_finite_differences() {
        let x = sample(3, 4, 0.3);
        check(x.clone(), |t, x| {
            let w = t.constant(sample(4, 2, 1.0));
            let y = t.matmul(x, w);
            reduce(t, y)
        });
        check(x.clone(), |t, x| {
            let b = t.constant(sample(5, 4, 2.0));
            let y = t.matmul_bt(x, b);
            reduce(t, y)
        });
        check(x.clone(), |t, x| {
            let y = t.gelu(x);
            reduce(t, y)
        });
        check(x.clone(), |t, x| {
            let y = t.layer_norm(x);
            reduce(t, y)
        });
        check(x.clone(), |t, x| {
            let y = t.softmax_rows(x, 3);
            reduce(t, y)
        });
        check(x.clone(), |t, x| {
            let a = t.slice_cols(x, 1, 2);
            let b = t.slice_cols(x, 0, 1);
            let y = t.concat_cols(&[a, b, a]);
            reduce(t, y)
        });
        check(x.clone(), |t, x| {
            let y = t.embed(x, &[2, 0, 2, 1]);
            reduce(t, y)
        });
        check(x.clone(), |t, x| {
            let y = t.masked_mean_rows(x, 2);
            reduce(t, y)
        });
        check(x.clone(), |t, x| {
            let r = t.slice_cols(x, 0, 4);
            let row = t.masked_mean_rows(r, 1);
            let y = t.add_row(x, row);
            let y = t.mul_row(y, row);
            reduce(t, y)
        });
        check(sample(1, 6, 0.1), |t, x| t.cross_entropy(x, 2, 5));
        check(sample(6, 1, 0.1), |t, x| {
            t.squared_error(x, vec![0.1, -0.3, 0.4, 0.0])
        });
        check(x, |t, x| {
            let y = t.mask_scale(x, (0..12).map(|i| if i % 3 == 0 { 0.0 } else { 1.25 }).collect());
            reduce(t, y)
        });
    }

    #[test]
    fn grad_reverse_negates_and_scales_the_adjoint() {
        let x = sample(2, 3, 0.0);
        let mut tape = Tape::new();
        let p = tape.param(x.clone());
        let y = reduce(&mut tape, p);
        let plain = tape.backward(y).get(p).unwrap().clone();

        let mut tape = Tape::new();
        let p = tape.param(x);
        let r = tape.grad_reverse(p, 0.3);
        assert_eq!(tape.value(r), tape.value(p));
        let y = reduce(&mut tape, r);
        let rev = tape.backward(y).get(p).unwrap().clone();
        for (a, b) in rev.data().iter().zip(plain.data()) {
            assert!((a + 0.3 * b).abs() < 1e-12);
        }
    }

    #[test]
    fn constants_receive_no_gradient() {
        let mut tape = Tape::new();
        let a = tape.param(sample(2, 2, 0.0));
        let b = tape.constant(sample(2, 2, 1.0));
        let y = tape.matmul(a, b);
        let y = reduce(&mut tape, y);
        let g = tape.backward(y);
        assert!(g.get(a).is_some());
        assert!(g.get(b).is_none());
    }
}

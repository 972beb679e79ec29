//! Tensor-level reverse-mode tape.
//!
//! Every operation appends a node holding its forward value and the handles
//! of its inputs. Nodes are only ever appended after their inputs, so the
//! node vector is already in topological order and [`Graph::backward`] is a
//! single reverse sweep that visits each node once.
//!
//! ```
//! use arrayopt_autodiff::{Graph, Tensor};
//!
//! let mut g = Graph::new();
//! let x = g.param(Tensor::row(vec![-1.0, 2.0]));
//! let r = g.relu(x);
//! let s = g.sum(r);
//! g.backward(s).unwrap();
//! assert_eq!(g.grad(x).unwrap().data(), &[0.0, 1.0]);
//! ```

use crate::error::{AutodiffError, Result};
use crate::tensor::Tensor;

/// Handle to a node on a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    Transpose(Var),
    AddBias(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    Relu(Var),
    Softmax(Var),
    LayerNorm {
        x: Var,
        gamma: Var,
        beta: Var,
        xhat: Vec<f64>,
        inv_std: Vec<f64>,
    },
    SliceCols { x: Var, start: usize },
    ConcatCols(Vec<Var>),
    ConcatRows(Vec<Var>),
    RowMask(Var, Vec<bool>),
    Sum(Var),
    Mean(Var),
    Log(Var),
    Recip(Var),
}

struct Node {
    value: Tensor,
    op: Op,
    tracked: bool,
}

/// Recording tape. One graph per worker; not shared across threads.
#[derive(Default)]
pub struct Graph {
    nodes: Vec<Node>,
    grads: Vec<Option<Tensor>>,
}

fn dims(op: &'static str, t: &Tensor) -> Result<(usize, usize)> {
    t.dims2().ok_or_else(|| AutodiffError::InvalidArgument {
        op,
        msg: format!("expected a rank-1 or rank-2 tensor, got {:?}", t.shape()),
    })
}

fn mismatch(op: &'static str, a: &Tensor, b: &Tensor) -> AutodiffError {
    AutodiffError::ShapeMismatch {
        op,
        lhs: a.shape().to_vec(),
        rhs: b.shape().to_vec(),
    }
}

/// Row-major `c (m x n) += a (m x k) * b (k x n)` where either operand may be
/// read transposed from its stored layout.
#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    a_trans: bool,
    b: &[f64],
    b_trans: bool,
    c: &mut [f64],
) {
    if m == 0 || n == 0 || k == 0 {
        return;
    }
    // stored a is (m x k) or, when transposed, (k x m)
    let (rsa, csa) = if a_trans { (1, m as isize) } else { (k as isize, 1) };
    let (rsb, csb) = if b_trans { (1, k as isize) } else { (n as isize, 1) };
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            1.0,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor, op: Op, tracked: bool) -> Var {
        self.nodes.push(Node { value, op, tracked });
        self.grads.push(None);
        Var(self.nodes.len() - 1)
    }

    fn tracked(&self, vars: &[Var]) -> bool {
        vars.iter().any(|v| self.nodes[v.0].tracked)
    }

    /// Leaf whose gradient is wanted.
    pub fn param(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf, true)
    }

    /// Leaf treated as a constant.
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf, false)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn grad(&self, v: Var) -> Option<&Tensor> {
        self.grads[v.0].as_ref()
    }

    /// Clears every gradient accumulator.
    pub fn zero_grad(&mut self) {
        for g in &mut self.grads {
            *g = None;
        }
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        let (m, k) = dims("matmul", ta)?;
        let (k2, n) = dims("matmul", tb)?;
        if k != k2 {
            return Err(mismatch("matmul", ta, tb));
        }
        let mut out = vec![0.0; m * n];
        gemm(m, k, n, ta.data(), false, tb.data(), false, &mut out);
        let tracked = self.tracked(&[a, b]);
        Ok(self.push(Tensor::matrix(m, n, out), Op::MatMul(a, b), tracked))
    }

    pub fn transpose(&mut self, x: Var) -> Result<Var> {
        let t = self.value(x);
        let (r, c) = dims("transpose", t)?;
        let mut out = vec![0.0; r * c];
        for i in 0..r {
            for j in 0..c {
                out[j * r + i] = t.data()[i * c + j];
            }
        }
        let tracked = self.tracked(&[x]);
        Ok(self.push(Tensor::matrix(c, r, out), Op::Transpose(x), tracked))
    }

    /// `x + b` with `b` (length = columns of `x`) broadcast over rows.
    pub fn add_bias(&mut self, x: Var, b: Var) -> Result<Var> {
        let (tx, tb) = (self.value(x), self.value(b));
        let (r, c) = dims("add_bias", tx)?;
        if tb.len() != c {
            return Err(mismatch("add_bias", tx, tb));
        }
        let mut out = tx.data().to_vec();
        for row in out.chunks_mut(c.max(1)).take(r) {
            for (o, bv) in row.iter_mut().zip(tb.data()) {
                *o += bv;
            }
        }
        let shape = tx.shape().to_vec();
        let tracked = self.tracked(&[x, b]);
        Ok(self.push(Tensor::new(shape, out)?, Op::AddBias(x, b), tracked))
    }

    fn zip_same(
        &mut self,
        op_name: &'static str,
        a: Var,
        b: Var,
        f: impl Fn(f64, f64) -> f64,
        op: Op,
    ) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.shape() != tb.shape() {
            return Err(mismatch(op_name, ta, tb));
        }
        let out: Vec<f64> = ta.data().iter().zip(tb.data()).map(|(x, y)| f(*x, *y)).collect();
        let shape = ta.shape().to_vec();
        let tracked = self.tracked(&[a, b]);
        Ok(self.push(Tensor::new(shape, out)?, op, tracked))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.zip_same("add", a, b, |x, y| x + y, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.zip_same("sub", a, b, |x, y| x - y, Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.zip_same("mul", a, b, |x, y| x * y, Op::Mul(a, b))
    }

    fn map(&mut self, x: Var, f: impl Fn(f64) -> f64, op: Op) -> Var {
        let t = self.value(x);
        let out = t.data().iter().map(|v| f(*v)).collect();
        let shape = t.shape().to_vec();
        let tracked = self.tracked(&[x]);
        self.push(Tensor::new(shape, out).expect("same shape"), op, tracked)
    }

    pub fn scale(&mut self, x: Var, s: f64) -> Var {
        self.map(x, |v| v * s, Op::Scale(x, s))
    }

    pub fn relu(&mut self, x: Var) -> Var {
        self.map(x, |v| v.max(0.0), Op::Relu(x))
    }

    pub fn log(&mut self, x: Var) -> Var {
        self.map(x, f64::ln, Op::Log(x))
    }

    pub fn recip(&mut self, x: Var) -> Var {
        self.map(x, |v| 1.0 / v, Op::Recip(x))
    }

    /// Row-wise softmax over the last axis. Columns whose `mask` entry is
    /// `false` get probability zero; a fully masked row is all zeros.
    pub fn softmax(&mut self, x: Var, mask: Option<&[bool]>) -> Result<Var> {
        let t = self.value(x);
        let (r, c) = dims("softmax", t)?;
        if let Some(m) = mask {
            if m.len() != c {
                return Err(AutodiffError::ShapeMismatch {
                    op: "softmax",
                    lhs: t.shape().to_vec(),
                    rhs: vec![m.len()],
                });
            }
        }
        let keep = |j: usize| mask.is_none_or(|m| m[j]);
        let mut out = vec![0.0; r * c];
        for i in 0..r {
            let row = &t.data()[i * c..(i + 1) * c];
            let max = (0..c)
                .filter(|&j| keep(j))
                .map(|j| row[j])
                .fold(f64::NEG_INFINITY, f64::max);
            if max == f64::NEG_INFINITY {
                continue;
            }
            let mut total = 0.0;
            for j in (0..c).filter(|&j| keep(j)) {
                let e = (row[j] - max).exp();
                out[i * c + j] = e;
                total += e;
            }
            for v in &mut out[i * c..(i + 1) * c] {
                *v /= total;
            }
        }
        let shape = t.shape().to_vec();
        let tracked = self.tracked(&[x]);
        Ok(self.push(Tensor::new(shape, out)?, Op::Softmax(x), tracked))
    }

    /// Row-wise layer normalization followed by the affine `gamma * xhat + beta`.
    pub fn layer_norm(&mut self, x: Var, gamma: Var, beta: Var, eps: f64) -> Result<Var> {
        let (tx, tg, tb) = (self.value(x), self.value(gamma), self.value(beta));
        let (r, c) = dims("layer_norm", tx)?;
        if tg.len() != c {
            return Err(mismatch("layer_norm", tx, tg));
        }
        if tb.len() != c {
            return Err(mismatch("layer_norm", tx, tb));
        }
        let mut xhat = vec![0.0; r * c];
        let mut inv_std = vec![0.0; r];
        let mut out = vec![0.0; r * c];
        for i in 0..r {
            let row = &tx.data()[i * c..(i + 1) * c];
            let mean = row.iter().sum::<f64>() / c as f64;
            let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / c as f64;
            let is = 1.0 / (var + eps).sqrt();
            inv_std[i] = is;
            for j in 0..c {
                let h = (row[j] - mean) * is;
                xhat[i * c + j] = h;
                out[i * c + j] = tg.data()[j] * h + tb.data()[j];
            }
        }
        let shape = tx.shape().to_vec();
        let tracked = self.tracked(&[x, gamma, beta]);
        Ok(self.push(
            Tensor::new(shape, out)?,
            Op::LayerNorm {
                x,
                gamma,
                beta,
                xhat,
                inv_std,
            },
            tracked,
        ))
    }

    pub fn slice_cols(&mut self, x: Var, start: usize, len: usize) -> Result<Var> {
        let t = self.value(x);
        let (r, c) = dims("slice_cols", t)?;
        if start + len > c {
            return Err(AutodiffError::InvalidArgument {
                op: "slice_cols",
                msg: format!("columns {start}..{} out of range for {:?}", start + len, t.shape()),
            });
        }
        let mut out = Vec::with_capacity(r * len);
        for i in 0..r {
            out.extend_from_slice(&t.data()[i * c + start..i * c + start + len]);
        }
        let tracked = self.tracked(&[x]);
        Ok(self.push(Tensor::matrix(r, len, out), Op::SliceCols { x, start }, tracked))
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        let first = parts.first().ok_or(AutodiffError::InvalidArgument {
            op: "concat_cols",
            msg: "no inputs".into(),
        })?;
        let (r, _) = dims("concat_cols", self.value(*first))?;
        let mut widths = Vec::with_capacity(parts.len());
        for p in parts {
            let (pr, pc) = dims("concat_cols", self.value(*p))?;
            if pr != r {
                return Err(mismatch("concat_cols", self.value(*first), self.value(*p)));
            }
            widths.push(pc);
        }
        let total: usize = widths.iter().sum();
        let mut out = vec![0.0; r * total];
        let mut offset = 0;
        for (p, w) in parts.iter().zip(&widths) {
            let d = self.value(*p).data();
            for i in 0..r {
                out[i * total + offset..i * total + offset + w].copy_from_slice(&d[i * w..(i + 1) * w]);
            }
            offset += w;
        }
        let tracked = self.tracked(parts);
        Ok(self.push(Tensor::matrix(r, total, out), Op::ConcatCols(parts.to_vec()), tracked))
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Result<Var> {
        let first = parts.first().ok_or(AutodiffError::InvalidArgument {
            op: "concat_rows",
            msg: "no inputs".into(),
        })?;
        let (_, c) = dims("concat_rows", self.value(*first))?;
        let mut out = Vec::new();
        let mut rows = 0;
        for p in parts {
            let (pr, pc) = dims("concat_rows", self.value(*p))?;
            if pc != c {
                return Err(mismatch("concat_rows", self.value(*first), self.value(*p)));
            }
            out.extend_from_slice(self.value(*p).data());
            rows += pr;
        }
        let tracked = self.tracked(parts);
        Ok(self.push(Tensor::matrix(rows, c, out), Op::ConcatRows(parts.to_vec()), tracked))
    }

    /// Zeroes every row whose mask entry is `false`.
    pub fn row_mask(&mut self, x: Var, mask: &[bool]) -> Result<Var> {
        let t = self.value(x);
        let (r, c) = dims("row_mask", t)?;
        if mask.len() != r {
            return Err(AutodiffError::ShapeMismatch {
                op: "row_mask",
                lhs: t.shape().to_vec(),
                rhs: vec![mask.len()],
            });
        }
        let mut out = t.data().to_vec();
        for (i, keep) in mask.iter().enumerate() {
            if !keep {
                out[i * c..(i + 1) * c].fill(0.0);
            }
        }
        let shape = t.shape().to_vec();
        let tracked = self.tracked(&[x]);
        Ok(self.push(Tensor::new(shape, out)?, Op::RowMask(x, mask.to_vec()), tracked))
    }

    pub fn sum(&mut self, x: Var) -> Var {
        let s = self.value(x).data().iter().sum();
        let tracked = self.tracked(&[x]);
        self.push(Tensor::scalar(s), Op::Sum(x), tracked)
    }

    pub fn mean(&mut self, x: Var) -> Var {
        let t = self.value(x);
        let s = t.data().iter().sum::<f64>() / t.len() as f64;
        let tracked = self.tracked(&[x]);
        self.push(Tensor::scalar(s), Op::Mean(x), tracked)
    }

    /// Single-head scaled dot-product attention
    /// `softmax(q kᵀ / sqrt(d)) v`, with optional key mask.
    pub fn scaled_dot_attention(
        &mut self,
        q: Var,
        k: Var,
        v: Var,
        key_mask: Option<&[bool]>,
    ) -> Result<Var> {
        let (_, d) = dims("scaled_dot_attention", self.value(q))?;
        let kt = self.transpose(k)?;
        let scores = self.matmul(q, kt)?;
        let scores = self.scale(scores, 1.0 / (d as f64).sqrt());
        let attn = self.softmax(scores, key_mask)?;
        self.matmul(attn, v)
    }

    /// Splits the columns of `x` into `heads` equal blocks.
    pub fn split_heads(&mut self, x: Var, heads: usize) -> Result<Vec<Var>> {
        let (_, c) = dims("split_heads", self.value(x))?;
        if heads == 0 || c % heads != 0 {
            return Err(AutodiffError::InvalidArgument {
                op: "split_heads",
                msg: format!("{c} columns cannot be split into {heads} heads"),
            });
        }
        let w = c / heads;
        (0..heads).map(|h| self.slice_cols(x, h * w, w)).collect()
    }

    pub fn concat_heads(&mut self, heads: &[Var]) -> Result<Var> {
        self.concat_cols(heads)
    }

    /// Accumulates `d out / d node` into every tracked node.
    ///
    /// Accumulators must be cleared with [`Graph::zero_grad`] between passes;
    /// stale accumulators trip a debug assertion.
    pub fn backward(&mut self, out: Var) -> Result<()> {
        let t = self.value(out);
        if !t.is_scalar() {
            return Err(AutodiffError::NotScalar(t.shape().to_vec()));
        }
        debug_assert!(
            self.grads.iter().all(Option::is_none),
            "gradient accumulators not zeroed before backward"
        );
        self.grads[out.0] = Some(Tensor::new(t.shape().to_vec(), vec![1.0])?);
        for idx in (0..=out.0).rev() {
            if !self.nodes[idx].tracked {
                continue;
            }
            let Some(gy) = self.grads[idx].take() else {
                continue;
            };
            self.propagate(idx, &gy);
            self.grads[idx] = Some(gy);
        }
        Ok(())
    }

    fn accumulate(&mut self, v: Var, delta: Vec<f64>) {
        if !self.nodes[v.0].tracked {
            return;
        }
        match &mut self.grads[v.0] {
            Some(g) => g.add_assign(&delta),
            slot @ None => {
                let shape = self.nodes[v.0].value.shape().to_vec();
                *slot = Some(Tensor::new(shape, delta).expect("gradient shape"));
            }
        }
    }

    fn wants(&self, v: Var) -> bool {
        self.nodes[v.0].tracked
    }

    fn propagate(&mut self, idx: usize, gy: &Tensor) {
        let g = gy.data();
        // Ops are moved out temporarily so inputs can be borrowed mutably.
        let op = std::mem::replace(&mut self.nodes[idx].op, Op::Leaf);
        match &op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let (m, k) = self.value(*a).dims2().unwrap();
                let n = self.value(*b).dims2().unwrap().1;
                if self.wants(*a) {
                    let mut da = vec![0.0; m * k];
                    gemm(m, n, k, g, false, self.value(*b).data(), true, &mut da);
                    self.accumulate(*a, da);
                }
                if self.wants(*b) {
                    let mut db = vec![0.0; k * n];
                    gemm(k, m, n, self.value(*a).data(), true, g, false, &mut db);
                    self.accumulate(*b, db);
                }
            }
            Op::Transpose(x) => {
                let (r, c) = self.value(*x).dims2().unwrap();
                let mut dx = vec![0.0; r * c];
                for i in 0..r {
                    for j in 0..c {
                        dx[i * c + j] = g[j * r + i];
                    }
                }
                self.accumulate(*x, dx);
            }
            Op::AddBias(x, b) => {
                let c = self.value(*b).len();
                if self.wants(*b) {
                    let mut db = vec![0.0; c];
                    for row in g.chunks(c.max(1)) {
                        for (d, v) in db.iter_mut().zip(row) {
                            *d += v;
                        }
                    }
                    self.accumulate(*b, db);
                }
                self.accumulate(*x, g.to_vec());
            }
            Op::Add(a, b) => {
                self.accumulate(*a, g.to_vec());
                self.accumulate(*b, g.to_vec());
            }
            Op::Sub(a, b) => {
                self.accumulate(*a, g.to_vec());
                self.accumulate(*b, g.iter().map(|v| -v).collect());
            }
            Op::Mul(a, b) => {
                let da = g.iter().zip(self.value(*b).data()).map(|(x, y)| x * y).collect();
                let db = g.iter().zip(self.value(*a).data()).map(|(x, y)| x * y).collect();
                self.accumulate(*a, da);
                self.accumulate(*b, db);
            }
            Op::Scale(x, s) => self.accumulate(*x, g.iter().map(|v| v * s).collect()),
            Op::Relu(x) => {
                let dx = g
                    .iter()
                    .zip(self.value(*x).data())
                    .map(|(d, v)| if *v > 0.0 { *d } else { 0.0 })
                    .collect();
                self.accumulate(*x, dx);
            }
            Op::Softmax(x) => {
                let y = self.nodes[idx].value.data();
                let (r, c) = self.nodes[idx].value.dims2().unwrap();
                let mut dx = vec![0.0; r * c];
                for i in 0..r {
                    let (yr, gr) = (&y[i * c..(i + 1) * c], &g[i * c..(i + 1) * c]);
                    let dot: f64 = yr.iter().zip(gr).map(|(a, b)| a * b).sum();
                    for j in 0..c {
                        dx[i * c + j] = yr[j] * (gr[j] - dot);
                    }
                }
                self.accumulate(*x, dx);
            }
            Op::LayerNorm {
                x,
                gamma,
                beta,
                xhat,
                inv_std,
            } => {
                let (r, c) = self.value(*x).dims2().unwrap();
                let gam = self.value(*gamma).data().to_vec();
                let mut dgamma = vec![0.0; c];
                let mut dbeta = vec![0.0; c];
                let mut dx = vec![0.0; r * c];
                for i in 0..r {
                    let gr = &g[i * c..(i + 1) * c];
                    let hr = &xhat[i * c..(i + 1) * c];
                    let mut mean_dh = 0.0;
                    let mut mean_dh_h = 0.0;
                    for j in 0..c {
                        dgamma[j] += gr[j] * hr[j];
                        dbeta[j] += gr[j];
                        let dh = gr[j] * gam[j];
                        mean_dh += dh;
                        mean_dh_h += dh * hr[j];
                    }
                    mean_dh /= c as f64;
                    mean_dh_h /= c as f64;
                    for j in 0..c {
                        let dh = gr[j] * gam[j];
                        dx[i * c + j] = inv_std[i] * (dh - mean_dh - hr[j] * mean_dh_h);
                    }
                }
                self.accumulate(*x, dx);
                self.accumulate(*gamma, dgamma);
                self.accumulate(*beta, dbeta);
            }
            Op::SliceCols { x, start } => {
                let (r, c) = self.value(*x).dims2().unwrap();
                let w = gy.dims2().unwrap().1;
                let mut dx = vec![0.0; r * c];
                for i in 0..r {
                    dx[i * c + start..i * c + start + w].copy_from_slice(&g[i * w..(i + 1) * w]);
                }
                self.accumulate(*x, dx);
            }
            Op::ConcatCols(parts) => {
                let total = gy.dims2().unwrap().1;
                let mut offset = 0;
                for p in parts {
                    let (r, w) = self.value(*p).dims2().unwrap();
                    let mut dp = Vec::with_capacity(r * w);
                    for i in 0..r {
                        dp.extend_from_slice(&g[i * total + offset..i * total + offset + w]);
                    }
                    offset += w;
                    self.accumulate(*p, dp);
                }
            }
            Op::ConcatRows(parts) => {
                let mut offset = 0;
                for p in parts {
                    let n = self.value(*p).len();
                    self.accumulate(*p, g[offset..offset + n].to_vec());
                    offset += n;
                }
            }
            Op::RowMask(x, mask) => {
                let c = gy.dims2().unwrap().1;
                let mut dx = g.to_vec();
                for (i, keep) in mask.iter().enumerate() {
                    if !keep {
                        dx[i * c..(i + 1) * c].fill(0.0);
                    }
                }
                self.accumulate(*x, dx);
            }
            Op::Sum(x) => {
                let n = self.value(*x).len();
                self.accumulate(*x, vec![g[0]; n]);
            }
            Op::Mean(x) => {
                let n = self.value(*x).len();
                self.accumulate(*x, vec![g[0] / n as f64; n]);
            }
            Op::Log(x) => {
                let dx = g.iter().zip(self.value(*x).data()).map(|(d, v)| d / v).collect();
                self.accumulate(*x, dx);
            }
            Op::Recip(x) => {
                let dx = g
                    .iter()
                    .zip(self.value(*x).data())
                    .map(|(d, v)| -d / (v * v))
                    .collect();
                self.accumulate(*x, dx);
            }
        }
        self.nodes[idx].op = op;
    }
}

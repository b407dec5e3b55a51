//! Tape-based reverse-mode differentiation over dense matrices.
//!
//! Every primitive appends a node holding its forward value and the
//! references needed to propagate gradients back to its inputs. Nodes are
//! appended in evaluation order, so the tape is topologically sorted and
//! [`Tape::backward`] is a single reverse sweep.

use std::sync::Arc;

use super::sparse::Csr;
use super::tensor::{dot, Tensor};
use crate::error::{Error, Result};

/// Floor applied inside [`Tape::log_guarded`].
pub const LOG_FLOOR: f64 = 1e-12;

/// Handle to a node on a [`Tape`].
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
    SpMM(Arc<Csr>, Var),
    Add(Var, Var),
    AddRow(Var, Var),
    Mul(Var, Var),
    MulConst(Var, Arc<Tensor>),
    Scale(Var, f64),
    RowSoftmax(Var),
    Relu(Var),
    LeakyRelu(Var, f64),
    Sigmoid(Var),
    LogGuarded(Var),
    Sum(Var),
    Mean(Var),
    ColMean(Var),
    RowInner(Var, Var),
    GatherRows(Var, Arc<Vec<usize>>),
    SegmentSoftmax(Var, Arc<Csr>),
    EdgeAggregate {
        weights: Var,
        values: Var,
        pattern: Arc<Csr>,
    },
    ConcatCols(Vec<Var>),
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
}

/// Record of primitive operations for one forward pass.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
    grads: Vec<Option<Tensor>>,
    backward_done: bool,
}

fn same_shape(op: &'static str, a: &Tensor, b: &Tensor) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::Shape {
            op,
            left: a.shape(),
            right: b.shape(),
        });
    }
    Ok(())
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Leaf that receives a gradient.
    pub fn param(&mut self, value: Tensor) -> Var {
        self.push_raw(value, Op::Leaf, true)
    }

    /// Leaf that does not receive a gradient.
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push_raw(value, Op::Leaf, false)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    /// Gradient of the last backward pass with respect to `v`.
    pub fn grad(&self, v: Var) -> Option<&Tensor> {
        self.grads.get(v.0).and_then(Option::as_ref)
    }

    pub fn reset_grads(&mut self) {
        self.grads.clear();
        self.backward_done = false;
    }

    fn push_raw(&mut self, value: Tensor, op: Op, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn push(&mut self, value: Tensor, op: Op, inputs: &[Var]) -> Var {
        let rg = inputs.iter().any(|v| self.nodes[v.0].requires_grad);
        self.push_raw(value, op, rg)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.value(a).matmul(self.value(b))?;
        Ok(self.push(value, Op::MatMul(a, b), &[a, b]))
    }

    /// Constant sparse matrix times a dense node.
    pub fn sparse_dense_matmul(&mut self, s: &Arc<Csr>, x: Var) -> Result<Var> {
        let value = s.matmul_dense(self.value(x))?;
        Ok(self.push(value, Op::SpMM(Arc::clone(s), x), &[x]))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        same_shape("add", ta, tb)?;
        let value = ta.zip_map(tb, |x, y| x + y);
        Ok(self.push(value, Op::Add(a, b), &[a, b]))
    }

    /// Adds a `1×c` row to every row of an `n×c` node.
    pub fn add_row(&mut self, x: Var, row: Var) -> Result<Var> {
        let (tx, tr) = (self.value(x), self.value(row));
        if tr.rows() != 1 || tr.cols() != tx.cols() {
            return Err(Error::Shape {
                op: "add_row",
                left: tx.shape(),
                right: tr.shape(),
            });
        }
        let mut value = tx.clone();
        for r in 0..value.rows() {
            for (o, &b) in value.row_mut(r).iter_mut().zip(tr.data()) {
                *o += b;
            }
        }
        Ok(self.push(value, Op::AddRow(x, row), &[x, row]))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        same_shape("mul", ta, tb)?;
        let value = ta.zip_map(tb, |x, y| x * y);
        Ok(self.push(value, Op::Mul(a, b), &[a, b]))
    }

    /// Elementwise product with a constant (masks, one-hot selectors).
    pub fn mul_const(&mut self, x: Var, c: Arc<Tensor>) -> Result<Var> {
        let tx = self.value(x);
        same_shape("mul_const", tx, &c)?;
        let value = tx.zip_map(&c, |a, b| a * b);
        Ok(self.push(value, Op::MulConst(x, c), &[x]))
    }

    pub fn scale(&mut self, x: Var, s: f64) -> Var {
        let value = self.value(x).map(|v| v * s);
        self.push(value, Op::Scale(x, s), &[x])
    }

    pub fn row_softmax(&mut self, x: Var) -> Var {
        let tx = self.value(x);
        let mut value = tx.clone();
        for r in 0..value.rows() {
            softmax_in_place(value.row_mut(r));
        }
        self.push(value, Op::RowSoftmax(x), &[x])
    }

    pub fn relu(&mut self, x: Var) -> Var {
        let value = self.value(x).map(|v| v.max(0.0));
        self.push(value, Op::Relu(x), &[x])
    }

    pub fn leaky_relu(&mut self, x: Var, slope: f64) -> Var {
        let value = self
            .value(x)
            .map(|v| if v > 0.0 { v } else { slope * v });
        self.push(value, Op::LeakyRelu(x, slope), &[x])
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        let value = self.value(x).map(sigmoid);
        self.push(value, Op::Sigmoid(x), &[x])
    }

    /// `log(max(x, LOG_FLOOR))`; the gradient is zero where the floor is active.
    pub fn log_guarded(&mut self, x: Var) -> Var {
        let value = self.value(x).map(|v| v.max(LOG_FLOOR).ln());
        self.push(value, Op::LogGuarded(x), &[x])
    }

    pub fn sum(&mut self, x: Var) -> Var {
        let s = self.value(x).data().iter().sum();
        self.push(Tensor::scalar(s), Op::Sum(x), &[x])
    }

    pub fn mean(&mut self, x: Var) -> Var {
        let t = self.value(x);
        let n = t.len().max(1) as f64;
        let s = t.data().iter().sum::<f64>() / n;
        self.push(Tensor::scalar(s), Op::Mean(x), &[x])
    }

    /// Column means of an `n×c` node as a `1×c` node.
    pub fn col_mean(&mut self, x: Var) -> Var {
        let t = self.value(x);
        let n = t.rows().max(1) as f64;
        let mut value = Tensor::zeros(1, t.cols());
        for r in 0..t.rows() {
            for (o, &v) in value.data_mut().iter_mut().zip(t.row(r)) {
                *o += v;
            }
        }
        for o in value.data_mut() {
            *o /= n;
        }
        self.push(value, Op::ColMean(x), &[x])
    }

    /// Row-wise inner products of two `n×c` nodes as an `n×1` node.
    pub fn row_inner_product(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        same_shape("row_inner_product", ta, tb)?;
        let data = (0..ta.rows()).map(|r| dot(ta.row(r), tb.row(r))).collect();
        let value = Tensor::from_vec(ta.rows(), 1, data)?;
        Ok(self.push(value, Op::RowInner(a, b), &[a, b]))
    }

    /// Selects rows `idx` (with repetition) of an `n×c` node.
    pub fn gather_rows(&mut self, x: Var, idx: Arc<Vec<usize>>) -> Result<Var> {
        let tx = self.value(x);
        if let Some(&bad) = idx.iter().find(|&&i| i >= tx.rows()) {
            return Err(Error::Shape {
                op: "gather_rows",
                left: tx.shape(),
                right: (bad, 0),
            });
        }
        let c = tx.cols();
        let mut data = Vec::with_capacity(idx.len() * c);
        for &i in idx.iter() {
            data.extend_from_slice(tx.row(i));
        }
        let value = Tensor::from_vec(idx.len(), c, data)?;
        Ok(self.push(value, Op::GatherRows(x, idx), &[x]))
    }

    /// Softmax of an `E×1` edge-score column within each row segment of
    /// `pattern` (one segment per destination node).
    pub fn segment_softmax(&mut self, scores: Var, pattern: &Arc<Csr>) -> Result<Var> {
        let ts = self.value(scores);
        if ts.cols() != 1 || ts.rows() != pattern.nnz() {
            return Err(Error::Shape {
                op: "segment_softmax",
                left: ts.shape(),
                right: (pattern.nnz(), 1),
            });
        }
        let mut value = ts.clone();
        let ptr = pattern.indptr();
        for r in 0..pattern.n_rows() {
            softmax_in_place(&mut value.data_mut()[ptr[r]..ptr[r + 1]]);
        }
        Ok(self.push(value, Op::SegmentSoftmax(scores, Arc::clone(pattern)), &[scores]))
    }

    /// `out[i] = Σ_{e ∈ row i} w[e] · values[col(e)]`, with differentiable
    /// edge weights `w` (`E×1`).
    pub fn edge_aggregate(&mut self, weights: Var, values: Var, pattern: &Arc<Csr>) -> Result<Var> {
        let (tw, tv) = (self.value(weights), self.value(values));
        if tw.cols() != 1 || tw.rows() != pattern.nnz() || tv.rows() != pattern.n_cols() {
            return Err(Error::Shape {
                op: "edge_aggregate",
                left: tw.shape(),
                right: tv.shape(),
            });
        }
        let ptr = pattern.indptr();
        let cols = pattern.indices();
        let mut value = Tensor::zeros(pattern.n_rows(), tv.cols());
        for r in 0..pattern.n_rows() {
            let out = value.row_mut(r);
            for e in ptr[r]..ptr[r + 1] {
                let w = tw.data()[e];
                for (o, &b) in out.iter_mut().zip(tv.row(cols[e])) {
                    *o += w * b;
                }
            }
        }
        Ok(self.push(
            value,
            Op::EdgeAggregate {
                weights,
                values,
                pattern: Arc::clone(pattern),
            },
            &[weights, values],
        ))
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        let rows = parts.first().map_or(0, |&p| self.value(p).rows());
        for &p in parts {
            if self.value(p).rows() != rows {
                return Err(Error::Shape {
                    op: "concat_cols",
                    left: self.value(parts[0]).shape(),
                    right: self.value(p).shape(),
                });
            }
        }
        let total: usize = parts.iter().map(|&p| self.value(p).cols()).sum();
        let mut value = Tensor::zeros(rows, total);
        for r in 0..rows {
            let mut off = 0;
            for &p in parts {
                let src = self.value(p).row(r);
                value.row_mut(r)[off..off + src.len()].copy_from_slice(src);
                off += src.len();
            }
        }
        Ok(self.push(value, Op::ConcatCols(parts.to_vec()), parts))
    }

    /// Reverse sweep from a scalar `loss`. Afterwards every gradient-requiring
    /// leaf holds a gradient (zeros if unreachable from `loss`).
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        if self.backward_done {
            return Err(Error::BackwardTwice);
        }
        let shape = self.value(loss).shape();
        if shape != (1, 1) {
            return Err(Error::NotScalar(shape));
        }
        self.grads = (0..self.nodes.len()).map(|_| None).collect();
        self.grads[loss.0] = Some(Tensor::scalar(1.0));

        for i in (0..=loss.0).rev() {
            if !self.nodes[i].requires_grad || matches!(self.nodes[i].op, Op::Leaf) {
                continue;
            }
            let Some(g) = self.grads[i].take() else {
                continue;
            };
            self.propagate(i, &g);
        }
        for (i, node) in self.nodes.iter().enumerate() {
            if node.requires_grad && matches!(node.op, Op::Leaf) && self.grads[i].is_none() {
                let (r, c) = node.value.shape();
                self.grads[i] = Some(Tensor::zeros(r, c));
            }
        }
        self.backward_done = true;
        Ok(())
    }

    fn accumulate(&mut self, v: Var, g: Tensor) {
        if !self.nodes[v.0].requires_grad {
            return;
        }
        match &mut self.grads[v.0] {
            Some(acc) => acc.add_assign(&g),
            slot => *slot = Some(g),
        }
    }

    fn wants(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    fn propagate(&mut self, i: usize, g: &Tensor) {
        // Borrow the op out temporarily so that `self` stays mutable.
        let op = std::mem::replace(&mut self.nodes[i].op, Op::Leaf);
        match &op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                if self.wants(*a) {
                    let ga = g.matmul_t(self.value(*b));
                    self.accumulate(*a, ga);
                }
                if self.wants(*b) {
                    let gb = self.value(*a).t_matmul(g);
                    self.accumulate(*b, gb);
                }
            }
            Op::SpMM(s, x) => {
                let gx = s.t_matmul_dense(g);
                self.accumulate(*x, gx);
            }
            Op::Add(a, b) => {
                self.accumulate(*a, g.clone());
                self.accumulate(*b, g.clone());
            }
            Op::AddRow(x, row) => {
                if self.wants(*row) {
                    let mut gr = Tensor::zeros(1, g.cols());
                    for r in 0..g.rows() {
                        for (o, &v) in gr.data_mut().iter_mut().zip(g.row(r)) {
                            *o += v;
                        }
                    }
                    self.accumulate(*row, gr);
                }
                self.accumulate(*x, g.clone());
            }
            Op::Mul(a, b) => {
                if self.wants(*a) {
                    let ga = g.zip_map(self.value(*b), |x, y| x * y);
                    self.accumulate(*a, ga);
                }
                if self.wants(*b) {
                    let gb = g.zip_map(self.value(*a), |x, y| x * y);
                    self.accumulate(*b, gb);
                }
            }
            Op::MulConst(x, c) => {
                let gx = g.zip_map(c, |a, b| a * b);
                self.accumulate(*x, gx);
            }
            Op::Scale(x, s) => {
                let s = *s;
                self.accumulate(*x, g.map(|v| v * s));
            }
            Op::RowSoftmax(x) => {
                let y = &self.nodes[i].value;
                let mut gx = Tensor::zeros(y.rows(), y.cols());
                for r in 0..y.rows() {
                    let (yr, gr) = (y.row(r), g.row(r));
                    let inner = dot(yr, gr);
                    for ((o, &yv), &gv) in gx.row_mut(r).iter_mut().zip(yr).zip(gr) {
                        *o = yv * (gv - inner);
                    }
                }
                self.accumulate(*x, gx);
            }
            Op::Relu(x) => {
                let gx = g.zip_map(self.value(*x), |gv, xv| if xv > 0.0 { gv } else { 0.0 });
                self.accumulate(*x, gx);
            }
            Op::LeakyRelu(x, slope) => {
                let slope = *slope;
                let gx = g.zip_map(self.value(*x), |gv, xv| if xv > 0.0 { gv } else { slope * gv });
                self.accumulate(*x, gx);
            }
            Op::Sigmoid(x) => {
                let gx = g.zip_map(&self.nodes[i].value, |gv, y| gv * y * (1.0 - y));
                self.accumulate(*x, gx);
            }
            Op::LogGuarded(x) => {
                let gx = g.zip_map(self.value(*x), |gv, xv| if xv > LOG_FLOOR { gv / xv } else { 0.0 });
                self.accumulate(*x, gx);
            }
            Op::Sum(x) => {
                let (r, c) = self.value(*x).shape();
                self.accumulate(*x, Tensor::full(r, c, g.item()));
            }
            Op::Mean(x) => {
                let (r, c) = self.value(*x).shape();
                let n = (r * c).max(1) as f64;
                self.accumulate(*x, Tensor::full(r, c, g.item() / n));
            }
            Op::ColMean(x) => {
                let (r, c) = self.value(*x).shape();
                let n = r.max(1) as f64;
                let mut gx = Tensor::zeros(r, c);
                for row in 0..r {
                    for (o, &gv) in gx.row_mut(row).iter_mut().zip(g.data()) {
                        *o = gv / n;
                    }
                }
                self.accumulate(*x, gx);
            }
            Op::RowInner(a, b) => {
                let scale_rows = |t: &Tensor| {
                    let mut out = t.clone();
                    for r in 0..out.rows() {
                        let s = g.data()[r];
                        for v in out.row_mut(r) {
                            *v *= s;
                        }
                    }
                    out
                };
                if self.wants(*a) {
                    let ga = scale_rows(self.value(*b));
                    self.accumulate(*a, ga);
                }
                if self.wants(*b) {
                    let gb = scale_rows(self.value(*a));
                    self.accumulate(*b, gb);
                }
            }
            Op::GatherRows(x, idx) => {
                let (r, c) = self.value(*x).shape();
                let mut gx = Tensor::zeros(r, c);
                for (k, &src) in idx.iter().enumerate() {
                    for (o, &gv) in gx.row_mut(src).iter_mut().zip(g.row(k)) {
                        *o += gv;
                    }
                }
                self.accumulate(*x, gx);
            }
            Op::SegmentSoftmax(x, pattern) => {
                let y = self.nodes[i].value.data();
                let ptr = pattern.indptr();
                let mut gx = Tensor::zeros(y.len(), 1);
                for r in 0..pattern.n_rows() {
                    let span = ptr[r]..ptr[r + 1];
                    let inner = dot(&y[span.clone()], &g.data()[span.clone()]);
                    for e in span {
                        gx.data_mut()[e] = y[e] * (g.data()[e] - inner);
                    }
                }
                self.accumulate(*x, gx);
            }
            Op::EdgeAggregate {
                weights,
                values,
                pattern,
            } => {
                let ptr = pattern.indptr();
                let cols = pattern.indices();
                if self.wants(*weights) {
                    let tv = self.value(*values);
                    let mut gw = Tensor::zeros(pattern.nnz(), 1);
                    for r in 0..pattern.n_rows() {
                        for e in ptr[r]..ptr[r + 1] {
                            gw.data_mut()[e] = dot(g.row(r), tv.row(cols[e]));
                        }
                    }
                    self.accumulate(*weights, gw);
                }
                if self.wants(*values) {
                    let tw = self.value(*weights);
                    let mut gv = Tensor::zeros(pattern.n_cols(), g.cols());
                    for r in 0..pattern.n_rows() {
                        for e in ptr[r]..ptr[r + 1] {
                            let w = tw.data()[e];
                            for (o, &x) in gv.row_mut(cols[e]).iter_mut().zip(g.row(r)) {
                                *o += w * x;
                            }
                        }
                    }
                    self.accumulate(*values, gv);
                }
            }
            Op::ConcatCols(parts) => {
                let mut off = 0;
                for &p in parts {
                    let (r, c) = self.value(p).shape();
                    if self.wants(p) {
                        let mut gp = Tensor::zeros(r, c);
                        for row in 0..r {
                            gp.row_mut(row).copy_from_slice(&g.row(row)[off..off + c]);
                        }
                        self.accumulate(p, gp);
                    }
                    off += c;
                }
            }
        }
        self.nodes[i].op = op;
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Numerically stable softmax of a slice, in place. Empty slices are left alone.
pub(crate) fn softmax_in_place(xs: &mut [f64]) {
    let Some(max) = xs.iter().copied().reduce(f64::max) else {
        return;
    };
    let mut total = 0.0;
    for v in xs.iter_mut() {
        *v = (*v - max).exp();
        total += *v;
    }
    for v in xs.iter_mut() {
        *v /= total;
    }
}

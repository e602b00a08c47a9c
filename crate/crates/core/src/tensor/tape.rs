use std::sync::Arc;

use super::params::{Gradients, ParamId, ParamStore};
use super::Tensor;
use crate::error::{Error, Result, Shape};

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

enum Value {
    Owned(Tensor),
    Param(ParamId),
}

enum Op {
    Leaf,
    Param(ParamId),
    MatMul(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    AddRow(Var, Var),
    Relu(Var),
    LeakyRelu(Var, f64),
    Sigmoid(Var),
    ConcatCols(Vec<Var>),
    ConcatRows(Vec<Var>),
    Reshape(Var),
    SliceRows(Var, usize),
    GatherRows(Var, Arc<[usize]>),
    SegmentSoftmax(Var, Arc<[usize]>),
    SegmentWeightedSum { weights: Var, values: Var, index: Arc<[usize]>, offsets: Arc<[usize]> },
    Sum(Var),
    SmoothL1(Var, Var),
    Mse(Var, Var),
}

struct Node {
    value: Value,
    op: Op,
    needs_grad: bool,
}

/// Records operations for one forward pass and replays them backwards.
///
/// A tape is confined to one thread; run independent tapes for independent
/// graphs.
pub struct Tape<'p> {
    params: &'p ParamStore,
    nodes: Vec<Node>,
    param_vars: Vec<Option<Var>>,
}

fn dim_err(op: &'static str, a: &Tensor, b: &Tensor) -> Error {
    Error::Dimension { op, lhs: a.shape_err(), rhs: b.shape_err() }
}

fn check_offsets(op: &'static str, offsets: &[usize], len: usize) -> Result<()> {
    let ok = !offsets.is_empty()
        && offsets[0] == 0
        && *offsets.last().unwrap() == len
        && offsets.windows(2).all(|w| w[0] <= w[1]);
    if ok {
        Ok(())
    } else {
        Err(Error::Dimension { op, lhs: Shape(vec![offsets.len()]), rhs: Shape(vec![len]) })
    }
}

/// `c += a * b` with optional transposes of row-major operands.
/// `a` is `m x k` after transposition, `b` is `k x n`.
#[allow(clippy::too_many_arguments)]
fn gemm_acc(m: usize, k: usize, n: usize, a: &[f64], a_t: bool, b: &[f64], b_t: bool, c: &mut [f64]) {
    if m == 0 || n == 0 || k == 0 {
        return;
    }
    let (rsa, csa) = if a_t { (1, m as isize) } else { (k as isize, 1) };
    let (rsb, csb) = if b_t { (1, k as isize) } else { (n as isize, 1) };
    // SAFETY: slice lengths match the dimensions and strides above; the
    // output does not alias the inputs.
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

impl<'p> Tape<'p> {
    pub fn new(params: &'p ParamStore) -> Self {
        Tape { params, nodes: Vec::new(), param_vars: vec![None; params.len()] }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor, op: Op, needs_grad: bool) -> Var {
        self.nodes.push(Node { value: Value::Owned(value), op, needs_grad });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        match &self.nodes[v.0].value {
            Value::Owned(t) => t,
            Value::Param(id) => self.params.get(*id),
        }
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        self.value(v).shape()
    }

    fn needs(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    /// A value that receives no gradient.
    pub fn constant(&mut self, t: Tensor) -> Var {
        self.push(t, Op::Leaf, false)
    }

    /// A trainable parameter. Repeated calls return the same handle.
    pub fn param(&mut self, id: ParamId) -> Var {
        if let Some(v) = self.param_vars[id.index()] {
            return v;
        }
        let trainable = self.params.is_trainable(id);
        self.nodes.push(Node { value: Value::Param(id), op: Op::Param(id), needs_grad: trainable });
        let v = Var(self.nodes.len() - 1);
        self.param_vars[id.index()] = Some(v);
        v
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        let (m, k, n) = (ta.rows(), ta.cols(), tb.cols());
        if tb.rows() != k {
            return Err(dim_err("matmul", ta, tb));
        }
        let mut out = vec![0.0; m * n];
        gemm_acc(m, k, n, ta.data(), false, tb.data(), false, &mut out);
        let ng = self.needs(a) || self.needs(b);
        Ok(self.push(Tensor { shape: vec![m, n], data: out }, Op::MatMul(a, b), ng))
    }

    fn zip_same(&mut self, op: &'static str, a: Var, b: Var, f: impl Fn(f64, f64) -> f64) -> Result<Tensor> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.shape() != tb.shape() {
            return Err(dim_err(op, ta, tb));
        }
        let data = ta.data().iter().zip(tb.data()).map(|(&x, &y)| f(x, y)).collect();
        Ok(Tensor { shape: ta.shape().to_vec(), data })
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let t = self.zip_same("add", a, b, |x, y| x + y)?;
        let ng = self.needs(a) || self.needs(b);
        Ok(self.push(t, Op::Add(a, b), ng))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let t = self.zip_same("sub", a, b, |x, y| x - y)?;
        let ng = self.needs(a) || self.needs(b);
        Ok(self.push(t, Op::Sub(a, b), ng))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let t = self.zip_same("mul", a, b, |x, y| x * y)?;
        let ng = self.needs(a) || self.needs(b);
        Ok(self.push(t, Op::Mul(a, b), ng))
    }

    pub fn scale(&mut self, a: Var, s: f64) -> Var {
        let ta = self.value(a);
        let t = Tensor { shape: ta.shape().to_vec(), data: ta.data().iter().map(|x| x * s).collect() };
        let ng = self.needs(a);
        self.push(t, Op::Scale(a, s), ng)
    }

    /// Adds `bias` (length = columns of `a`) to every row of `a`.
    pub fn add_row(&mut self, a: Var, bias: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(bias));
        let c = ta.cols();
        if tb.len() != c {
            return Err(dim_err("add_row", ta, tb));
        }
        let mut data = ta.data().to_vec();
        for row in data.chunks_mut(c.max(1)) {
            for (x, b) in row.iter_mut().zip(tb.data()) {
                *x += b;
            }
        }
        let t = Tensor { shape: ta.shape().to_vec(), data };
        let ng = self.needs(a) || self.needs(bias);
        Ok(self.push(t, Op::AddRow(a, bias), ng))
    }

    fn map(&mut self, a: Var, op: Op, f: impl Fn(f64) -> f64) -> Var {
        let ta = self.value(a);
        let t = Tensor { shape: ta.shape().to_vec(), data: ta.data().iter().map(|&x| f(x)).collect() };
        let ng = self.needs(a);
        self.push(t, op, ng)
    }

    pub fn relu(&mut self, a: Var) -> Var {
        self.map(a, Op::Relu(a), |x| x.max(0.0))
    }

    pub fn leaky_relu(&mut self, a: Var, slope: f64) -> Var {
        self.map(a, Op::LeakyRelu(a, slope), move |x| if x > 0.0 { x } else { slope * x })
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        self.map(a, Op::Sigmoid(a), |x| {
            if x >= 0.0 {
                1.0 / (1.0 + (-x).exp())
            } else {
                let e = x.exp();
                e / (1.0 + e)
            }
        })
    }

    /// Side-by-side concatenation of matrices with equal row counts.
    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        let first = *parts.first().ok_or_else(|| Error::invalid("concat of nothing"))?;
        let rows = self.value(first).rows();
        for &p in parts {
            if self.value(p).rows() != rows {
                return Err(dim_err("concat_cols", self.value(first), self.value(p)));
            }
        }
        let widths: Vec<usize> = parts.iter().map(|&p| self.value(p).cols()).collect();
        let total: usize = widths.iter().sum();
        let mut data = Vec::with_capacity(rows * total);
        for r in 0..rows {
            for &p in parts {
                data.extend_from_slice(self.value(p).row_slice(r));
            }
        }
        let ng = parts.iter().any(|&p| self.needs(p));
        Ok(self.push(Tensor { shape: vec![rows, total], data }, Op::ConcatCols(parts.to_vec()), ng))
    }

    /// Stacks matrices with equal column counts on top of each other.
    pub fn concat_rows(&mut self, parts: &[Var]) -> Result<Var> {
        let first = *parts.first().ok_or_else(|| Error::invalid("concat of nothing"))?;
        let cols = self.value(first).cols();
        let mut rows = 0;
        let mut data = Vec::new();
        for &p in parts {
            let t = self.value(p);
            if t.cols() != cols {
                return Err(dim_err("concat_rows", self.value(first), t));
            }
            rows += t.rows();
            data.extend_from_slice(t.data());
        }
        let ng = parts.iter().any(|&p| self.needs(p));
        Ok(self.push(Tensor { shape: vec![rows, cols], data }, Op::ConcatRows(parts.to_vec()), ng))
    }

    pub fn reshape(&mut self, a: Var, shape: Vec<usize>) -> Result<Var> {
        let ta = self.value(a);
        if shape.iter().product::<usize>() != ta.len() {
            return Err(Error::Dimension { op: "reshape", lhs: ta.shape_err(), rhs: Shape(shape) });
        }
        let t = Tensor { shape, data: ta.data().to_vec() };
        let ng = self.needs(a);
        Ok(self.push(t, Op::Reshape(a), ng))
    }

    /// Rows `start..start + len`.
    pub fn slice_rows(&mut self, a: Var, start: usize, len: usize) -> Result<Var> {
        let ta = self.value(a);
        if start + len > ta.rows() {
            return Err(Error::Dimension { op: "slice_rows", lhs: ta.shape_err(), rhs: Shape(vec![start, len]) });
        }
        let c = ta.cols();
        let t = Tensor { shape: vec![len, c], data: ta.data()[start * c..(start + len) * c].to_vec() };
        let ng = self.needs(a);
        Ok(self.push(t, Op::SliceRows(a, start), ng))
    }

    /// `out[k] = a[index[k]]` row-wise.
    pub fn gather_rows(&mut self, a: Var, index: Arc<[usize]>) -> Result<Var> {
        let ta = self.value(a);
        let (r, c) = (ta.rows(), ta.cols());
        if let Some(&bad) = index.iter().find(|&&i| i >= r) {
            return Err(Error::Dimension { op: "gather_rows", lhs: ta.shape_err(), rhs: Shape(vec![bad]) });
        }
        let mut data = Vec::with_capacity(index.len() * c);
        for &i in index.iter() {
            data.extend_from_slice(&ta.data()[i * c..(i + 1) * c]);
        }
        let ng = self.needs(a);
        Ok(self.push(Tensor { shape: vec![index.len(), c], data }, Op::GatherRows(a, index), ng))
    }

    /// Softmax of a score column within contiguous groups
    /// `offsets[g]..offsets[g + 1]`.
    pub fn segment_softmax(&mut self, scores: Var, offsets: Arc<[usize]>) -> Result<Var> {
        let ts = self.value(scores);
        if ts.cols() != 1 {
            return Err(Error::Dimension { op: "segment_softmax", lhs: ts.shape_err(), rhs: Shape(vec![ts.rows(), 1]) });
        }
        check_offsets("segment_softmax", &offsets, ts.rows())?;
        let mut out = vec![0.0; ts.rows()];
        for w in offsets.windows(2) {
            let seg = &ts.data()[w[0]..w[1]];
            let max = seg.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut z = 0.0;
            for (o, &s) in out[w[0]..w[1]].iter_mut().zip(seg) {
                *o = (s - max).exp();
                z += *o;
            }
            for o in out[w[0]..w[1]].iter_mut() {
                *o /= z;
            }
        }
        let ng = self.needs(scores);
        Ok(self.push(Tensor { shape: vec![out.len(), 1], data: out }, Op::SegmentSoftmax(scores, offsets), ng))
    }

    /// `out[g] = sum over k in group g of weights[k] * values[index[k]]`.
    pub fn segment_weighted_sum(
        &mut self,
        weights: Var,
        values: Var,
        index: Arc<[usize]>,
        offsets: Arc<[usize]>,
    ) -> Result<Var> {
        let (tw, tv) = (self.value(weights), self.value(values));
        if tw.cols() != 1 || tw.rows() != index.len() {
            return Err(Error::Dimension {
                op: "segment_weighted_sum",
                lhs: tw.shape_err(),
                rhs: Shape(vec![index.len(), 1]),
            });
        }
        check_offsets("segment_weighted_sum", &offsets, index.len())?;
        let (r, c) = (tv.rows(), tv.cols());
        if let Some(&bad) = index.iter().find(|&&i| i >= r) {
            return Err(Error::Dimension { op: "segment_weighted_sum", lhs: tv.shape_err(), rhs: Shape(vec![bad]) });
        }
        let groups = offsets.len() - 1;
        let mut out = vec![0.0; groups * c];
        for g in 0..groups {
            let dst = &mut out[g * c..(g + 1) * c];
            for k in offsets[g]..offsets[g + 1] {
                let w = tw.data()[k];
                let src = &tv.data()[index[k] * c..(index[k] + 1) * c];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += w * s;
                }
            }
        }
        let ng = self.needs(weights) || self.needs(values);
        Ok(self.push(
            Tensor { shape: vec![groups, c], data: out },
            Op::SegmentWeightedSum { weights, values, index, offsets },
            ng,
        ))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let s = self.value(a).data().iter().sum();
        let ng = self.needs(a);
        self.push(Tensor::scalar(s), Op::Sum(a), ng)
    }

    pub fn mean(&mut self, a: Var) -> Var {
        let n = self.value(a).len().max(1);
        let s = self.sum(a);
        self.scale(s, 1.0 / n as f64)
    }

    /// Mean over entries of `0.5 d^2` if `|d| < 1` else `|d| - 0.5`, with
    /// `d = pred - target`.
    pub fn smooth_l1(&mut self, pred: Var, target: Var) -> Result<Var> {
        let (tp, tt) = (self.value(pred), self.value(target));
        if tp.len() != tt.len() {
            return Err(dim_err("smooth_l1", tp, tt));
        }
        let n = tp.len().max(1) as f64;
        let total: f64 = tp.data().iter().zip(tt.data()).map(|(&p, &t)| smooth_l1_value(p - t)).sum();
        let ng = self.needs(pred) || self.needs(target);
        Ok(self.push(Tensor::scalar(total / n), Op::SmoothL1(pred, target), ng))
    }

    /// Mean squared error.
    pub fn mse(&mut self, pred: Var, target: Var) -> Result<Var> {
        let (tp, tt) = (self.value(pred), self.value(target));
        if tp.len() != tt.len() {
            return Err(dim_err("mse", tp, tt));
        }
        let n = tp.len().max(1) as f64;
        let total: f64 = tp.data().iter().zip(tt.data()).map(|(&p, &t)| (p - t) * (p - t)).sum();
        let ng = self.needs(pred) || self.needs(target);
        Ok(self.push(Tensor::scalar(total / n), Op::Mse(pred, target), ng))
    }

    /// Gradients of the scalar `loss` with respect to every trainable
    /// parameter it depends on.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        let lt = self.value(loss);
        if lt.len() != 1 {
            return Err(Error::Dimension { op: "backward", lhs: lt.shape_err(), rhs: Shape(vec![1]) });
        }
        let mut grads: Vec<Option<Vec<f64>>> = Vec::with_capacity(loss.0 + 1);
        grads.resize_with(loss.0 + 1, || None);
        grads[loss.0] = Some(vec![1.0]);
        let mut out = Gradients::new(self.params.len());

        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            if !node.needs_grad {
                continue;
            }
            self.propagate(node, &g, &mut grads, &mut out);
        }
        Ok(out)
    }

    fn grad_buf<'g>(&self, grads: &'g mut [Option<Vec<f64>>], v: Var) -> Option<&'g mut Vec<f64>> {
        if !self.nodes[v.0].needs_grad {
            return None;
        }
        let len = self.value(v).len();
        Some(grads[v.0].get_or_insert_with(|| vec![0.0; len]))
    }

    fn propagate(&self, node: &Node, g: &[f64], grads: &mut [Option<Vec<f64>>], out: &mut Gradients) {
        match &node.op {
            Op::Leaf => {}
            Op::Param(id) => out.accumulate(*id, g),
            Op::MatMul(a, b) => {
                let (ta, tb) = (self.value(*a), self.value(*b));
                let (m, k, n) = (ta.rows(), ta.cols(), tb.cols());
                if let Some(ga) = self.grad_buf(grads, *a) {
                    // dA = dC * B^T
                    gemm_acc(m, n, k, g, false, tb.data(), true, ga);
                }
                if let Some(gb) = self.grad_buf(grads, *b) {
                    // dB = A^T * dC
                    gemm_acc(k, m, n, ta.data(), true, g, false, gb);
                }
            }
            Op::Add(a, b) => {
                for v in [*a, *b] {
                    if let Some(buf) = self.grad_buf(grads, v) {
                        buf.iter_mut().zip(g).for_each(|(x, d)| *x += d);
                    }
                }
            }
            Op::Sub(a, b) => {
                if let Some(buf) = self.grad_buf(grads, *a) {
                    buf.iter_mut().zip(g).for_each(|(x, d)| *x += d);
                }
                if let Some(buf) = self.grad_buf(grads, *b) {
                    buf.iter_mut().zip(g).for_each(|(x, d)| *x -= d);
                }
            }
            Op::Mul(a, b) => {
                let (ta, tb) = (self.value(*a), self.value(*b));
                if let Some(buf) = self.grad_buf(grads, *a) {
                    for ((x, d), y) in buf.iter_mut().zip(g).zip(tb.data()) {
                        *x += d * y;
                    }
                }
                if let Some(buf) = self.grad_buf(grads, *b) {
                    for ((x, d), y) in buf.iter_mut().zip(g).zip(ta.data()) {
                        *x += d * y;
                    }
                }
            }
            Op::Scale(a, s) => {
                if let Some(buf) = self.grad_buf(grads, *a) {
                    buf.iter_mut().zip(g).for_each(|(x, d)| *x += d * s);
                }
            }
            Op::AddRow(a, bias) => {
                if let Some(buf) = self.grad_buf(grads, *a) {
                    buf.iter_mut().zip(g).for_each(|(x, d)| *x += d);
                }
                let c = self.value(*a).cols().max(1);
                if let Some(buf) = self.grad_buf(grads, *bias) {
                    for row in g.chunks(c) {
                        buf.iter_mut().zip(row).for_each(|(x, d)| *x += d);
                    }
                }
            }
            Op::Relu(a) => {
                let ta = self.value(*a);
                if let Some(buf) = self.grad_buf(grads, *a) {
                    for ((x, d), &v) in buf.iter_mut().zip(g).zip(ta.data()) {
                        if v > 0.0 {
                            *x += d;
                        }
                    }
                }
            }
            Op::LeakyRelu(a, slope) => {
                let ta = self.value(*a);
                if let Some(buf) = self.grad_buf(grads, *a) {
                    for ((x, d), &v) in buf.iter_mut().zip(g).zip(ta.data()) {
                        *x += if v > 0.0 { *d } else { slope * d };
                    }
                }
            }
            Op::Sigmoid(a) => {
                let y = match &node.value {
                    Value::Owned(t) => t.data(),
                    Value::Param(_) => unreachable!(),
                };
                if let Some(buf) = self.grad_buf(grads, *a) {
                    for ((x, d), &s) in buf.iter_mut().zip(g).zip(y) {
                        *x += d * s * (1.0 - s);
                    }
                }
            }
            Op::ConcatCols(parts) => {
                let total: usize = parts.iter().map(|&p| self.value(p).cols()).sum();
                let mut offset = 0;
                for &p in parts {
                    let c = self.value(p).cols();
                    if let Some(buf) = self.grad_buf(grads, p) {
                        for (r, dst) in buf.chunks_mut(c.max(1)).enumerate() {
                            let src = &g[r * total + offset..r * total + offset + c];
                            dst.iter_mut().zip(src).for_each(|(x, d)| *x += d);
                        }
                    }
                    offset += c;
                }
            }
            Op::ConcatRows(parts) => {
                let mut offset = 0;
                for &p in parts {
                    let len = self.value(p).len();
                    if let Some(buf) = self.grad_buf(grads, p) {
                        buf.iter_mut().zip(&g[offset..offset + len]).for_each(|(x, d)| *x += d);
                    }
                    offset += len;
                }
            }
            Op::Reshape(a) => {
                if let Some(buf) = self.grad_buf(grads, *a) {
                    buf.iter_mut().zip(g).for_each(|(x, d)| *x += d);
                }
            }
            Op::SliceRows(a, start) => {
                let c = self.value(*a).cols();
                if let Some(buf) = self.grad_buf(grads, *a) {
                    buf[start * c..start * c + g.len()].iter_mut().zip(g).for_each(|(x, d)| *x += d);
                }
            }
            Op::GatherRows(a, index) => {
                let c = self.value(*a).cols();
                if let Some(buf) = self.grad_buf(grads, *a) {
                    for (k, &i) in index.iter().enumerate() {
                        let src = &g[k * c..(k + 1) * c];
                        buf[i * c..(i + 1) * c].iter_mut().zip(src).for_each(|(x, d)| *x += d);
                    }
                }
            }
            Op::SegmentSoftmax(a, offsets) => {
                let y = match &node.value {
                    Value::Owned(t) => t.data(),
                    Value::Param(_) => unreachable!(),
                };
                if let Some(buf) = self.grad_buf(grads, *a) {
                    for w in offsets.windows(2) {
                        let dot: f64 = (w[0]..w[1]).map(|k| y[k] * g[k]).sum();
                        for k in w[0]..w[1] {
                            buf[k] += y[k] * (g[k] - dot);
                        }
                    }
                }
            }
            Op::SegmentWeightedSum { weights, values, index, offsets } => {
                let (tw, tv) = (self.value(*weights), self.value(*values));
                let c = tv.cols();
                if let Some(buf) = self.grad_buf(grads, *weights) {
                    for (grp, w) in offsets.windows(2).enumerate() {
                        let dg = &g[grp * c..(grp + 1) * c];
                        for k in w[0]..w[1] {
                            let row = &tv.data()[index[k] * c..(index[k] + 1) * c];
                            buf[k] += row.iter().zip(dg).map(|(a, b)| a * b).sum::<f64>();
                        }
                    }
                }
                if let Some(buf) = self.grad_buf(grads, *values) {
                    for (grp, w) in offsets.windows(2).enumerate() {
                        let dg = &g[grp * c..(grp + 1) * c];
                        for k in w[0]..w[1] {
                            let wk = tw.data()[k];
                            let dst = &mut buf[index[k] * c..(index[k] + 1) * c];
                            dst.iter_mut().zip(dg).for_each(|(x, d)| *x += wk * d);
                        }
                    }
                }
            }
            Op::Sum(a) => {
                if let Some(buf) = self.grad_buf(grads, *a) {
                    buf.iter_mut().for_each(|x| *x += g[0]);
                }
            }
            Op::SmoothL1(p, t) => {
                let (tp, tt) = (self.value(*p), self.value(*t));
                let n = tp.len().max(1) as f64;
                let deriv: Vec<f64> =
                    tp.data().iter().zip(tt.data()).map(|(&a, &b)| g[0] * smooth_l1_derivative(a - b) / n).collect();
                if let Some(buf) = self.grad_buf(grads, *p) {
                    buf.iter_mut().zip(&deriv).for_each(|(x, d)| *x += d);
                }
                if let Some(buf) = self.grad_buf(grads, *t) {
                    buf.iter_mut().zip(&deriv).for_each(|(x, d)| *x -= d);
                }
            }
            Op::Mse(p, t) => {
                let (tp, tt) = (self.value(*p), self.value(*t));
                let n = tp.len().max(1) as f64;
                let deriv: Vec<f64> = tp.data().iter().zip(tt.data()).map(|(&a, &b)| g[0] * 2.0 * (a - b) / n).collect();
                if let Some(buf) = self.grad_buf(grads, *p) {
                    buf.iter_mut().zip(&deriv).for_each(|(x, d)| *x += d);
                }
                if let Some(buf) = self.grad_buf(grads, *t) {
                    buf.iter_mut().zip(&deriv).for_each(|(x, d)| *x -= d);
                }
            }
        }
    }
}

/// Per-entry smooth L1 value.
pub(crate) fn smooth_l1_value(d: f64) -> f64 {
    if d.abs() < 1.0 {
        0.5 * d * d
    } else {
        d.abs() - 0.5
    }
}

pub(crate) fn smooth_l1_derivative(d: f64) -> f64 {
    if d.abs() < 1.0 {
        d
    } else {
        d.signum()
    }
}

//! Reverse-mode differentiation over a per-example tape of matrix ops.

use super::tensor::{gemm, Op as Trans};
use super::{Gradients, ParamId, ParamStore, Tensor};
use crate::error::{Error, Result};

/// Probabilities are clamped to `[BCE_EPSILON, 1 − BCE_EPSILON]` before the
/// log in the cross-entropy loss.
pub const BCE_EPSILON: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug)]
enum Op {
    Leaf,
    Param(ParamId),
    MatMul(Var, Var),
    Add(Var, Var),
    AddRow(Var, Var),
    Mul(Var, Var),
    OneMinus(Var),
    Sigmoid(Var),
    Tanh(Var),
    Relu(Var),
    SliceCols(Var, usize),
    ConcatCols(Vec<Var>),
    Row(Var, usize),
    ConcatRows(Vec<Var>),
    ReverseRows(Var),
    Transpose(Var),
    Gather(ParamId, Vec<usize>),
    Im2Col(Var, usize),
    /// Flat input offsets of the selected maxima, one per output entry.
    MaxPool(Var, Vec<usize>),
    Softmax(Var),
    Bce(Var, f64),
}

struct Node {
    value: Tensor,
    op: Op,
    needs_grad: bool,
}

pub struct Tape<'p> {
    params: &'p ParamStore,
    nodes: Vec<Node>,
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Binary cross-entropy of a probability against a 0/1 label, and its
/// derivative with respect to the probability (zero where clamping applies).
pub fn binary_cross_entropy(p: f64, label: f64) -> (f64, f64) {
    let clamped = p.clamp(BCE_EPSILON, 1.0 - BCE_EPSILON);
    let loss = -(label * clamped.ln() + (1.0 - label) * (1.0 - clamped).ln());
    let grad = if clamped == p {
        -label / p + (1.0 - label) / (1.0 - p)
    } else {
        0.0
    };
    (loss, grad)
}

/// Im2col window offset for "same" padding with an odd or even width.
pub(crate) fn same_padding_left(width: usize) -> usize {
    (width - 1) / 2
}

impl<'p> Tape<'p> {
    pub fn new(params: &'p ParamStore) -> Self {
        Self {
            params,
            nodes: Vec::new(),
        }
    }

    pub fn params(&self) -> &'p ParamStore {
        self.params
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        match self.nodes[v.0].op {
            Op::Param(id) => &self.params.get(id).value,
            _ => &self.nodes[v.0].value,
        }
    }

    fn needs(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    fn push(&mut self, value: Tensor, op: Op, needs_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            needs_grad,
        });
        Var(self.nodes.len() - 1)
    }

    pub fn leaf(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf, false)
    }

    pub fn param(&mut self, id: ParamId) -> Var {
        let trainable = self.params.get(id).trainable;
        self.push(Tensor::zeros(0, 0), Op::Param(id), trainable)
    }

    fn same_shape(&self, ctx: &str, a: Var, b: Var) -> Result<()> {
        let (sa, sb) = (self.value(a).shape(), self.value(b).shape());
        if sa != sb {
            return Err(Error::shape(ctx, format!("{sa:?} vs {sb:?}")));
        }
        Ok(())
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.value(a).matmul(self.value(b))?;
        let needs = self.needs(a) || self.needs(b);
        Ok(self.push(out, Op::MatMul(a, b), needs))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("add", a, b)?;
        let mut out = self.value(a).clone();
        out.add_assign(self.value(b));
        let needs = self.needs(a) || self.needs(b);
        Ok(self.push(out, Op::Add(a, b), needs))
    }

    /// Adds a `1 × c` row to every row of `a`.
    pub fn add_row(&mut self, a: Var, row: Var) -> Result<Var> {
        let (x, r) = (self.value(a), self.value(row));
        if r.rows() != 1 || r.cols() != x.cols() {
            return Err(Error::shape(
                "add_row",
                format!("{:?} + row {:?}", x.shape(), r.shape()),
            ));
        }
        let mut out = x.clone();
        for i in 0..out.rows() {
            out.row_mut(i)
                .iter_mut()
                .zip(r.data())
                .for_each(|(o, b)| *o += b);
        }
        let needs = self.needs(a) || self.needs(row);
        Ok(self.push(out, Op::AddRow(a, row), needs))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("mul", a, b)?;
        let mut out = self.value(a).clone();
        out.data_mut()
            .iter_mut()
            .zip(self.value(b).data())
            .for_each(|(x, y)| *x *= y);
        let needs = self.needs(a) || self.needs(b);
        Ok(self.push(out, Op::Mul(a, b), needs))
    }

    pub fn one_minus(&mut self, a: Var) -> Var {
        let out = self.value(a).map(|x| 1.0 - x);
        let needs = self.needs(a);
        self.push(out, Op::OneMinus(a), needs)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let out = self.value(a).map(sigmoid);
        let needs = self.needs(a);
        self.push(out, Op::Sigmoid(a), needs)
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let out = self.value(a).map(f64::tanh);
        let needs = self.needs(a);
        self.push(out, Op::Tanh(a), needs)
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let out = self.value(a).map(|x| x.max(0.0));
        let needs = self.needs(a);
        self.push(out, Op::Relu(a), needs)
    }

    pub fn slice_cols(&mut self, a: Var, start: usize, width: usize) -> Result<Var> {
        let x = self.value(a);
        if start + width > x.cols() {
            return Err(Error::shape(
                "slice_cols",
                format!("cols {start}..{} of {:?}", start + width, x.shape()),
            ));
        }
        let mut out = Tensor::zeros(x.rows(), width);
        for r in 0..x.rows() {
            out.row_mut(r)
                .copy_from_slice(&x.row(r)[start..start + width]);
        }
        let needs = self.needs(a);
        Ok(self.push(out, Op::SliceCols(a, start), needs))
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        let rows = self.value(parts[0]).rows();
        if parts.iter().any(|&p| self.value(p).rows() != rows) {
            return Err(Error::shape("concat_cols", "row counts differ"));
        }
        let cols: usize = parts.iter().map(|&p| self.value(p).cols()).sum();
        let mut out = Tensor::zeros(rows, cols);
        for r in 0..rows {
            let mut off = 0;
            for &p in parts {
                let src = self.value(p).row(r);
                out.row_mut(r)[off..off + src.len()].copy_from_slice(src);
                off += src.len();
            }
        }
        let needs = parts.iter().any(|&p| self.needs(p));
        Ok(self.push(out, Op::ConcatCols(parts.to_vec()), needs))
    }

    pub fn row(&mut self, a: Var, i: usize) -> Result<Var> {
        let x = self.value(a);
        if i >= x.rows() {
            return Err(Error::shape("row", format!("row {i} of {:?}", x.shape())));
        }
        let out = Tensor::row_vector(x.row(i).to_vec());
        let needs = self.needs(a);
        Ok(self.push(out, Op::Row(a, i), needs))
    }

    pub fn concat_rows(&mut self, parts: &[Var], cols: usize) -> Result<Var> {
        if parts.iter().any(|&p| self.value(p).cols() != cols) {
            return Err(Error::shape("concat_rows", "column counts differ"));
        }
        let rows: usize = parts.iter().map(|&p| self.value(p).rows()).sum();
        let mut data = Vec::with_capacity(rows * cols);
        for &p in parts {
            data.extend_from_slice(self.value(p).data());
        }
        let out = Tensor::new(rows, cols, data)?;
        let needs = parts.iter().any(|&p| self.needs(p));
        Ok(self.push(out, Op::ConcatRows(parts.to_vec()), needs))
    }

    pub fn reverse_rows(&mut self, a: Var) -> Var {
        let x = self.value(a);
        let mut out = Tensor::zeros(x.rows(), x.cols());
        for r in 0..x.rows() {
            out.row_mut(r).copy_from_slice(x.row(x.rows() - 1 - r));
        }
        let needs = self.needs(a);
        self.push(out, Op::ReverseRows(a), needs)
    }

    pub fn transpose(&mut self, a: Var) -> Var {
        let out = self.value(a).transpose();
        let needs = self.needs(a);
        self.push(out, Op::Transpose(a), needs)
    }

    /// Embedding lookup: one row of the parameter per index.
    pub fn gather(&mut self, table: ParamId, indices: &[usize]) -> Result<Var> {
        let p = self.params.get(table);
        let m = &p.value;
        if let Some(&bad) = indices.iter().find(|&&i| i >= m.rows()) {
            return Err(Error::shape(
                "gather",
                format!("index {bad} out of range for {} rows", m.rows()),
            ));
        }
        let mut out = Tensor::zeros(indices.len(), m.cols());
        for (r, &i) in indices.iter().enumerate() {
            out.row_mut(r).copy_from_slice(m.row(i));
        }
        let needs = p.trainable;
        Ok(self.push(out, Op::Gather(table, indices.to_vec()), needs))
    }

    /// Row `t` of the result holds input rows `t − left .. t − left + width`
    /// side by side, zero outside the sequence ("same" padding).
    pub fn im2col(&mut self, a: Var, width: usize) -> Var {
        let x = self.value(a);
        let (t_len, c) = (x.rows(), x.cols());
        let left = same_padding_left(width);
        let mut out = Tensor::zeros(t_len, width * c);
        for t in 0..t_len {
            for j in 0..width {
                let src = (t + j).checked_sub(left).filter(|&s| s < t_len);
                if let Some(s) = src {
                    out.row_mut(t)[j * c..(j + 1) * c].copy_from_slice(x.row(s));
                }
            }
        }
        let needs = self.needs(a);
        self.push(out, Op::Im2Col(a, width), needs)
    }

    /// Column-wise max over consecutive windows of `size` rows (the last
    /// window may be short). `None` pools the whole sequence into one row.
    pub fn max_pool(&mut self, a: Var, size: Option<usize>) -> Result<Var> {
        let x = self.value(a);
        let (t_len, c) = (x.rows(), x.cols());
        if t_len == 0 {
            return Err(Error::shape("max_pool", "empty sequence"));
        }
        let size = size.unwrap_or(t_len);
        let out_rows = t_len.div_ceil(size);
        let mut out = Tensor::zeros(out_rows, c);
        let mut arg = Vec::with_capacity(out_rows * c);
        for o in 0..out_rows {
            let lo = o * size;
            let hi = (lo + size).min(t_len);
            for col in 0..c {
                let mut best = lo;
                for t in lo + 1..hi {
                    if x.get(t, col) > x.get(best, col) {
                        best = t;
                    }
                }
                out.row_mut(o)[col] = x.get(best, col);
                arg.push(best * c + col);
            }
        }
        let needs = self.needs(a);
        Ok(self.push(out, Op::MaxPool(a, arg), needs))
    }

    /// Softmax over every entry of a row or column vector.
    pub fn softmax(&mut self, a: Var) -> Result<Var> {
        let x = self.value(a);
        if x.rows() != 1 && x.cols() != 1 {
            return Err(Error::shape(
                "softmax",
                format!("{:?} is not a vector", x.shape()),
            ));
        }
        let out = Tensor::new(x.rows(), x.cols(), softmax(x.data()))?;
        let needs = self.needs(a);
        Ok(self.push(out, Op::Softmax(a), needs))
    }

    pub fn bce(&mut self, prob: Var, label: f64) -> Result<Var> {
        let p = self.value(prob);
        if p.shape() != [1, 1] {
            return Err(Error::shape(
                "bce",
                format!("{:?} is not a scalar", p.shape()),
            ));
        }
        let (loss, _) = binary_cross_entropy(p.data()[0], label);
        let needs = self.needs(prob);
        Ok(self.push(Tensor::row_vector(vec![loss]), Op::Bce(prob, label), needs))
    }

    /// Back-propagates from the scalar `out`, adding parameter gradients into
    /// `grads`.
    pub fn backward(&self, out: Var, grads: &mut Gradients) -> Result<()> {
        if self.value(out).shape() != [1, 1] {
            return Err(Error::shape("backward", "output must be a scalar"));
        }
        let mut node_grads: Vec<Option<Tensor>> = Vec::new();
        node_grads.resize_with(out.0 + 1, || None);
        node_grads[out.0] = Some(Tensor::filled(1, 1, 1.0));

        for i in (0..=out.0).rev() {
            let node = &self.nodes[i];
            if !node.needs_grad {
                continue;
            }
            let Some(g) = node_grads[i].take() else {
                continue;
            };
            match &node.op {
                Op::Leaf => {}
                Op::Param(id) => {
                    if let Some(dst) = grads.get_mut(*id) {
                        dst.add_assign(&g);
                    }
                }
                Op::MatMul(a, b) => {
                    if self.needs(*a) {
                        let bv = self.value(*b);
                        let slot = self.slot(&mut node_grads, *a);
                        gemm(Trans::N, Trans::T, &g, bv, slot, 1.0);
                    }
                    if self.needs(*b) {
                        let av = self.value(*a);
                        let slot = self.slot(&mut node_grads, *b);
                        gemm(Trans::T, Trans::N, av, &g, slot, 1.0);
                    }
                }
                Op::Add(a, b) => {
                    self.accumulate(&mut node_grads, *a, &g);
                    self.accumulate(&mut node_grads, *b, &g);
                }
                Op::AddRow(a, row) => {
                    self.accumulate(&mut node_grads, *a, &g);
                    if self.needs(*row) {
                        let slot = self.slot(&mut node_grads, *row);
                        for r in 0..g.rows() {
                            slot.data_mut()
                                .iter_mut()
                                .zip(g.row(r))
                                .for_each(|(s, x)| *s += x);
                        }
                    }
                }
                Op::Mul(a, b) => {
                    for (target, other) in [(*a, *b), (*b, *a)] {
                        if self.needs(target) {
                            let ov = self.value(other);
                            let slot = self.slot(&mut node_grads, target);
                            for ((s, gx), o) in
                                slot.data_mut().iter_mut().zip(g.data()).zip(ov.data())
                            {
                                *s += gx * o;
                            }
                        }
                    }
                }
                Op::OneMinus(a) => {
                    let slot = self.slot(&mut node_grads, *a);
                    slot.data_mut()
                        .iter_mut()
                        .zip(g.data())
                        .for_each(|(s, x)| *s -= x);
                }
                Op::Sigmoid(a) => {
                    self.elementwise(&mut node_grads, *a, &g, &node.value, |y| y * (1.0 - y))
                }
                Op::Tanh(a) => {
                    self.elementwise(&mut node_grads, *a, &g, &node.value, |y| 1.0 - y * y)
                }
                Op::Relu(a) => self.elementwise(&mut node_grads, *a, &g, &node.value, |y| {
                    if y > 0.0 {
                        1.0
                    } else {
                        0.0
                    }
                }),
                Op::SliceCols(a, start) => {
                    let slot = self.slot(&mut node_grads, *a);
                    for r in 0..g.rows() {
                        slot.row_mut(r)[*start..*start + g.cols()]
                            .iter_mut()
                            .zip(g.row(r))
                            .for_each(|(s, x)| *s += x);
                    }
                }
                Op::ConcatCols(parts) => {
                    let mut off = 0;
                    for &p in parts {
                        let w = self.value(p).cols();
                        if self.needs(p) {
                            let slot = self.slot(&mut node_grads, p);
                            for r in 0..g.rows() {
                                slot.row_mut(r)
                                    .iter_mut()
                                    .zip(&g.row(r)[off..off + w])
                                    .for_each(|(s, x)| *s += x);
                            }
                        }
                        off += w;
                    }
                }
                Op::Row(a, idx) => {
                    let slot = self.slot(&mut node_grads, *a);
                    slot.row_mut(*idx)
                        .iter_mut()
                        .zip(g.data())
                        .for_each(|(s, x)| *s += x);
                }
                Op::ConcatRows(parts) => {
                    let mut off = 0;
                    for &p in parts {
                        let n = self.value(p).len();
                        if self.needs(p) {
                            let slot = self.slot(&mut node_grads, p);
                            slot.data_mut()
                                .iter_mut()
                                .zip(&g.data()[off..off + n])
                                .for_each(|(s, x)| *s += x);
                        }
                        off += n;
                    }
                }
                Op::ReverseRows(a) => {
                    let slot = self.slot(&mut node_grads, *a);
                    let t_len = g.rows();
                    for r in 0..t_len {
                        slot.row_mut(t_len - 1 - r)
                            .iter_mut()
                            .zip(g.row(r))
                            .for_each(|(s, x)| *s += x);
                    }
                }
                Op::Transpose(a) => {
                    let gt = g.transpose();
                    self.accumulate(&mut node_grads, *a, &gt);
                }
                Op::Gather(id, indices) => {
                    if let Some(dst) = grads.get_mut(*id) {
                        for (r, &idx) in indices.iter().enumerate() {
                            dst.row_mut(idx)
                                .iter_mut()
                                .zip(g.row(r))
                                .for_each(|(s, x)| *s += x);
                        }
                    }
                }
                Op::Im2Col(a, width) => {
                    let c = self.value(*a).cols();
                    let left = same_padding_left(*width);
                    let slot = self.slot(&mut node_grads, *a);
                    let t_len = slot.rows();
                    for t in 0..t_len {
                        for j in 0..*width {
                            if let Some(s) = (t + j).checked_sub(left).filter(|&s| s < t_len) {
                                slot.row_mut(s)
                                    .iter_mut()
                                    .zip(&g.row(t)[j * c..(j + 1) * c])
                                    .for_each(|(d, x)| *d += x);
                            }
                        }
                    }
                }
                Op::MaxPool(a, arg) => {
                    let slot = self.slot(&mut node_grads, *a);
                    for (k, &src) in arg.iter().enumerate() {
                        slot.data_mut()[src] += g.data()[k];
                    }
                }
                Op::Softmax(a) => {
                    let y = node.value.data();
                    let dot: f64 = y.iter().zip(g.data()).map(|(a, b)| a * b).sum();
                    let slot = self.slot(&mut node_grads, *a);
                    for ((s, yi), gi) in slot.data_mut().iter_mut().zip(y).zip(g.data()) {
                        *s += yi * (gi - dot);
                    }
                }
                Op::Bce(p, label) => {
                    let (_, d) = binary_cross_entropy(self.value(*p).data()[0], *label);
                    let slot = self.slot(&mut node_grads, *p);
                    slot.data_mut()[0] += g.data()[0] * d;
                }
            }
        }
        Ok(())
    }

    fn slot<'g>(&self, node_grads: &'g mut [Option<Tensor>], v: Var) -> &'g mut Tensor {
        let [r, c] = self.value(v).shape();
        node_grads[v.0].get_or_insert_with(|| Tensor::zeros(r, c))
    }

    fn accumulate(&self, node_grads: &mut [Option<Tensor>], v: Var, g: &Tensor) {
        if !self.needs(v) {
            return;
        }
        match &mut node_grads[v.0] {
            Some(t) => t.add_assign(g),
            slot @ None => *slot = Some(g.clone()),
        }
    }

    fn elementwise(
        &self,
        node_grads: &mut [Option<Tensor>],
        a: Var,
        g: &Tensor,
        y: &Tensor,
        dy: impl Fn(f64) -> f64,
    ) {
        let slot = self.slot(node_grads, a);
        for ((s, gx), yv) in slot.data_mut().iter_mut().zip(g.data()).zip(y.data()) {
            *s += gx * dy(*yv);
        }
    }
}

/// Max-shifted softmax.
pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

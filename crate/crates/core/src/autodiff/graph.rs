//! Tape-based reverse-mode differentiation over dense tensors.
//!
//! Every operation appends a node to the [`Graph`]. Nodes are stored in
//! execution order, which is a topological order, so backward is a single
//! reverse sweep over the node list.
//!
//! Leaf gradients persist across [`Graph::backward`] calls and accumulate
//! until [`Graph::zero_grads`]; intermediate gradients are recomputed on
//! every call.

use crate::autodiff::tensor::{numel, Tensor};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Handle to a node of a [`Graph`].
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
    Add(Var, Var),
    /// `[m, n] + [n]`, the vector added to every row.
    AddRow(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, T),
    Concat { inputs: Vec<Var>, axis: usize },
    Slice { input: Var, start: usize },
    Row { input: Var, row: usize },
    Reshape(Var),
    Sigmoid(Var),
    Tanh(Var),
    Relu(Var),
    Softmax(Var),
    Sum(Var),
    Mean(Var),
    SqDiff(Var, Var),
    GradReverse(Var, T),
    CrossEntropy { logits: Var, gold: usize, probs: Vec<T> },
    Mse(Var, Var),
}

#[derive(Clone, Debug)]
struct Node<T> {
    shape: Vec<usize>,
    value: Vec<T>,
    op: Op<T>,
    requires_grad: bool,
}

/// Record of executed tensor operations for one forward pass.
#[derive(Clone, Debug, Default)]
pub struct Graph<T> {
    nodes: Vec<Node<T>>,
    grads: Vec<Option<Vec<T>>>,
    params: Vec<(usize, Var)>,
}

fn dims2(shape: &[usize]) -> Option<(usize, usize)> {
    match shape {
        [m, n] => Some((*m, *n)),
        _ => None,
    }
}

impl<T: Scalar> Graph<T> {
    pub fn new() -> Self {
        Self {
            nodes: Vec::new(),
            grads: Vec::new(),
            params: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, shape: Vec<usize>, value: Vec<T>, op: Op<T>, requires_grad: bool) -> Var {
        debug_assert_eq!(numel(&shape), value.len());
        self.nodes.push(Node {
            shape,
            value,
            op,
            requires_grad,
        });
        self.grads.push(None);
        Var(self.nodes.len() - 1)
    }

    fn node(&self, v: Var) -> &Node<T> {
        &self.nodes[v.0]
    }

    fn rg(&self, vars: &[Var]) -> bool {
        vars.iter().any(|v| self.nodes[v.0].requires_grad)
    }

    /// Adds a leaf holding a copy of `tensor`'s values.
    pub fn leaf(&mut self, tensor: &Tensor<T>) -> Var {
        self.push(
            tensor.shape().to_vec(),
            tensor.values().to_vec(),
            Op::Leaf,
            tensor.requires_grad(),
        )
    }

    /// Adds a non-differentiable leaf.
    pub fn constant(&mut self, shape: &[usize], values: Vec<T>) -> Result<Var> {
        if numel(shape) != values.len() || shape.iter().any(|&d| d == 0) {
            return Err(Error::shape("constant", shape, &[values.len()]));
        }
        Ok(self.push(shape.to_vec(), values, Op::Leaf, false))
    }

    /// Adds a trainable leaf tied to parameter slot `id`; its gradient is
    /// reported by [`Graph::param_grads`].
    pub fn param(&mut self, id: usize, tensor: &Tensor<T>) -> Var {
        let v = self.push(
            tensor.shape().to_vec(),
            tensor.values().to_vec(),
            Op::Leaf,
            true,
        );
        self.params.push((id, v));
        v
    }

    pub fn value(&self, v: Var) -> &[T] {
        &self.node(v).value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        &self.node(v).shape
    }

    pub fn scalar(&self, v: Var) -> T {
        self.node(v).value[0]
    }

    pub fn tensor(&self, v: Var) -> Tensor<T> {
        let n = self.node(v);
        Tensor::new(n.shape.clone(), n.value.clone()).expect("node shape consistent")
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.node(v).requires_grad
    }

    /// Accumulated gradient of a node after [`Graph::backward`].
    pub fn grad(&self, v: Var) -> Option<&[T]> {
        self.grads[v.0].as_deref()
    }

    /// `(parameter id, gradient)` for every parameter leaf that received one.
    pub fn param_grads(&self) -> impl Iterator<Item = (usize, &[T])> + '_ {
        self.params
            .iter()
            .filter_map(|&(id, v)| self.grads[v.0].as_deref().map(|g| (id, g)))
    }

    pub fn zero_grads(&mut self) {
        for g in &mut self.grads {
            *g = None;
        }
    }

    // ---- forward primitives ----

    /// Matrix product. Supports `[m,k]x[k,n]`, `[m,k]x[k]` and `[k]x[k,n]`.
    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (sa, sb) = (self.shape(a).to_vec(), self.shape(b).to_vec());
        let (va, vb) = (self.value(a), self.value(b));
        let (shape, out) = match (sa.as_slice(), sb.as_slice()) {
            ([m, k], [k2, n]) if k == k2 => {
                let (m, k, n) = (*m, *k, *n);
                let mut out = vec![T::zero(); m * n];
                for i in 0..m {
                    let orow = &mut out[i * n..(i + 1) * n];
                    for p in 0..k {
                        let x = va[i * k + p];
                        if x == T::zero() {
                            continue;
                        }
                        let brow = &vb[p * n..(p + 1) * n];
                        for (o, &y) in orow.iter_mut().zip(brow) {
                            *o += x * y;
                        }
                    }
                }
                (vec![m, n], out)
            }
            ([m, k], [k2]) if k == k2 => {
                let (m, k) = (*m, *k);
                let out = (0..m)
                    .map(|i| {
                        va[i * k..(i + 1) * k]
                            .iter()
                            .zip(vb)
                            .fold(T::zero(), |acc, (&x, &y)| acc + x * y)
                    })
                    .collect();
                (vec![m], out)
            }
            ([k], [k2, n]) if k == k2 => {
                let (k, n) = (*k, *n);
                let mut out = vec![T::zero(); n];
                for p in 0..k {
                    let x = va[p];
                    for (o, &y) in out.iter_mut().zip(&vb[p * n..(p + 1) * n]) {
                        *o += x * y;
                    }
                }
                (vec![n], out)
            }
            _ => return Err(Error::shape("matmul", &sa, &sb)),
        };
        let rg = self.rg(&[a, b]);
        Ok(self.push(shape, out, Op::MatMul(a, b), rg))
    }

    /// Elementwise sum of equal shapes, or `[m,n] + [n]` row broadcast.
    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa == sb {
            let out = self.zip(a, b, |x, y| x + y);
            let rg = self.rg(&[a, b]);
            return Ok(self.push(self.shape(a).to_vec(), out, Op::Add(a, b), rg));
        }
        match (sa, sb) {
            ([_, n], [n2]) if n == n2 => {
                let n = *n;
                let vb = self.value(b);
                let out: Vec<T> = self
                    .value(a)
                    .iter()
                    .enumerate()
                    .map(|(i, &x)| x + vb[i % n])
                    .collect();
                let rg = self.rg(&[a, b]);
                Ok(self.push(self.shape(a).to_vec(), out, Op::AddRow(a, b), rg))
            }
            _ => Err(Error::shape("add", sa, sb)),
        }
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("sub", a, b)?;
        let out = self.zip(a, b, |x, y| x - y);
        let rg = self.rg(&[a, b]);
        Ok(self.push(self.shape(a).to_vec(), out, Op::Sub(a, b), rg))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("mul", a, b)?;
        let out = self.zip(a, b, |x, y| x * y);
        let rg = self.rg(&[a, b]);
        Ok(self.push(self.shape(a).to_vec(), out, Op::Mul(a, b), rg))
    }

    pub fn scale(&mut self, a: Var, c: T) -> Var {
        let out = self.value(a).iter().map(|&x| x * c).collect();
        let rg = self.rg(&[a]);
        self.push(self.shape(a).to_vec(), out, Op::Scale(a, c), rg)
    }

    /// Concatenates 1-D or 2-D tensors along `axis`.
    pub fn concat(&mut self, inputs: &[Var], axis: usize) -> Result<Var> {
        let first = *inputs
            .first()
            .ok_or_else(|| Error::Usage("concat of zero tensors".into()))?;
        let base = self.shape(first).to_vec();
        if axis >= base.len() || base.len() > 2 {
            return Err(Error::Config(format!(
                "concat: axis {axis} invalid for shape {base:?}"
            )));
        }
        for &v in &inputs[1..] {
            let s = self.shape(v);
            let ok = s.len() == base.len()
                && s.iter()
                    .zip(&base)
                    .enumerate()
                    .all(|(ax, (x, y))| ax == axis || x == y);
            if !ok {
                return Err(Error::shape("concat", &base, s));
            }
        }
        let total: usize = inputs.iter().map(|&v| self.shape(v)[axis]).sum();
        let mut shape = base.clone();
        shape[axis] = total;
        let mut out = Vec::with_capacity(numel(&shape));
        if base.len() == 1 || axis == 0 {
            for &v in inputs {
                out.extend_from_slice(self.value(v));
            }
        } else {
            for r in 0..base[0] {
                for &v in inputs {
                    let c = self.shape(v)[1];
                    out.extend_from_slice(&self.value(v)[r * c..(r + 1) * c]);
                }
            }
        }
        let rg = self.rg(inputs);
        Ok(self.push(
            shape,
            out,
            Op::Concat {
                inputs: inputs.to_vec(),
                axis,
            },
            rg,
        ))
    }

    /// Contiguous sub-vector `[start, start+len)` of a 1-D tensor.
    pub fn slice(&mut self, a: Var, start: usize, len: usize) -> Result<Var> {
        let s = self.shape(a);
        if s.len() != 1 || len == 0 || start + len > s[0] {
            return Err(Error::shape("slice", s, &[start, len]));
        }
        let out = self.value(a)[start..start + len].to_vec();
        let rg = self.rg(&[a]);
        Ok(self.push(vec![len], out, Op::Slice { input: a, start }, rg))
    }

    /// Row `row` of a 2-D tensor as a 1-D tensor.
    pub fn row(&mut self, a: Var, row: usize) -> Result<Var> {
        let s = self.shape(a);
        let Some((m, n)) = dims2(s) else {
            return Err(Error::shape("row", s, &[row]));
        };
        if row >= m {
            return Err(Error::shape("row", s, &[row]));
        }
        let out = self.value(a)[row * n..(row + 1) * n].to_vec();
        let rg = self.rg(&[a]);
        Ok(self.push(vec![n], out, Op::Row { input: a, row }, rg))
    }

    pub fn reshape(&mut self, a: Var, shape: &[usize]) -> Result<Var> {
        if numel(shape) != self.value(a).len() || shape.iter().any(|&d| d == 0) {
            return Err(Error::shape("reshape", self.shape(a), shape));
        }
        let out = self.value(a).to_vec();
        let rg = self.rg(&[a]);
        Ok(self.push(shape.to_vec(), out, Op::Reshape(a), rg))
    }

    /// Stacks equal-length 1-D tensors as the rows of a matrix.
    pub fn stack_rows(&mut self, rows: &[Var]) -> Result<Var> {
        let mut reshaped = Vec::with_capacity(rows.len());
        for &r in rows {
            let s = self.shape(r);
            if s.len() != 1 {
                return Err(Error::shape("stack_rows", s, &[]));
            }
            let n = s[0];
            reshaped.push(self.reshape(r, &[1, n])?);
        }
        self.concat(&reshaped, 0)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        self.unary(a, Op::Sigmoid(a), |x| T::one() / (T::one() + (-x).exp()))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        self.unary(a, Op::Tanh(a), |x| x.tanh())
    }

    pub fn relu(&mut self, a: Var) -> Var {
        self.unary(a, Op::Relu(a), |x| if x > T::zero() { x } else { T::zero() })
    }

    /// Softmax along the last axis. Positions where `mask` is `false` get
    /// probability exactly 0; the mask applies to every row.
    pub fn softmax(&mut self, a: Var, mask: Option<&[bool]>) -> Result<Var> {
        let shape = self.shape(a).to_vec();
        let n = *shape.last().expect("non-empty shape");
        if let Some(m) = mask {
            if m.len() != n {
                return Err(Error::shape("softmax", &shape, &[m.len()]));
            }
            if !m.iter().any(|&b| b) {
                return Err(Error::Input("softmax: every position is masked".into()));
            }
        }
        let keep = |j: usize| mask.map_or(true, |m| m[j]);
        let mut out = vec![T::zero(); self.value(a).len()];
        for (row_in, row_out) in self.value(a).chunks(n).zip(out.chunks_mut(n)) {
            let max = (0..n)
                .filter(|&j| keep(j))
                .map(|j| row_in[j])
                .fold(T::neg_infinity(), T::max);
            let mut total = T::zero();
            for j in (0..n).filter(|&j| keep(j)) {
                let e = (row_in[j] - max).exp();
                row_out[j] = e;
                total += e;
            }
            for o in row_out.iter_mut() {
                *o /= total;
            }
        }
        let rg = self.rg(&[a]);
        Ok(self.push(shape, out, Op::Softmax(a), rg))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let s = self.value(a).iter().copied().sum();
        let rg = self.rg(&[a]);
        self.push(vec![1], vec![s], Op::Sum(a), rg)
    }

    pub fn mean(&mut self, a: Var) -> Var {
        let v = self.value(a);
        let s = v.iter().copied().sum::<T>() / T::of_usize(v.len());
        let rg = self.rg(&[a]);
        self.push(vec![1], vec![s], Op::Mean(a), rg)
    }

    /// Elementwise `(a - b)^2`.
    pub fn sq_diff(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("sq_diff", a, b)?;
        let out = self.zip(a, b, |x, y| (x - y) * (x - y));
        let rg = self.rg(&[a, b]);
        Ok(self.push(self.shape(a).to_vec(), out, Op::SqDiff(a, b), rg))
    }

    /// Identity forward; backward multiplies the upstream gradient by `-rho`.
    pub fn grad_reverse(&mut self, a: Var, rho: T) -> Result<Var> {
        if rho < T::zero() || !rho.is_finite() {
            return Err(Error::Config(format!(
                "grad_reverse: rho must be finite and >= 0, got {rho}"
            )));
        }
        let out = self.value(a).to_vec();
        let rg = self.rg(&[a]);
        Ok(self.push(self.shape(a).to_vec(), out, Op::GradReverse(a, rho), rg))
    }

    /// `-log softmax(logits)[gold]`, log-sum-exp stabilized.
    pub fn cross_entropy(&mut self, logits: Var, gold: usize) -> Result<Var> {
        let s = self.shape(logits);
        if s.len() != 1 {
            return Err(Error::shape("cross_entropy", s, &[]));
        }
        let n = s[0];
        if gold >= n {
            return Err(Error::Input(format!(
                "cross_entropy: gold class {gold} outside [0, {n})"
            )));
        }
        let x = self.value(logits);
        let max = x.iter().copied().fold(T::neg_infinity(), T::max);
        let exps: Vec<T> = x.iter().map(|&v| (v - max).exp()).collect();
        let total: T = exps.iter().copied().sum();
        let loss = max + total.ln() - x[gold];
        let probs = exps.into_iter().map(|e| e / total).collect();
        let rg = self.rg(&[logits]);
        Ok(self.push(
            vec![1],
            vec![loss],
            Op::CrossEntropy {
                logits,
                gold,
                probs,
            },
            rg,
        ))
    }

    /// Mean over all elements of `(a - b)^2`.
    pub fn mse(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("mse", a, b)?;
        let n = T::of_usize(self.value(a).len());
        let s = self
            .value(a)
            .iter()
            .zip(self.value(b))
            .map(|(&x, &y)| (x - y) * (x - y))
            .sum::<T>()
            / n;
        let rg = self.rg(&[a, b]);
        Ok(self.push(vec![1], vec![s], Op::Mse(a, b), rg))
    }

    fn same_shape(&self, op: &'static str, a: Var, b: Var) -> Result<()> {
        if self.shape(a) != self.shape(b) {
            return Err(Error::shape(op, self.shape(a), self.shape(b)));
        }
        Ok(())
    }

    fn zip(&self, a: Var, b: Var, f: impl Fn(T, T) -> T) -> Vec<T> {
        self.value(a)
            .iter()
            .zip(self.value(b))
            .map(|(&x, &y)| f(x, y))
            .collect()
    }

    fn unary(&mut self, a: Var, op: Op<T>, f: impl Fn(T) -> T) -> Var {
        let out = self.value(a).iter().map(|&x| f(x)).collect();
        let rg = self.rg(&[a]);
        self.push(self.shape(a).to_vec(), out, op, rg)
    }

    // ---- backward ----

    /// Propagates d`loss`/d(node) to every node that requires a gradient.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        if self.node(loss).value.len() != 1 {
            return Err(Error::Usage(format!(
                "backward needs a scalar loss, got shape {:?}",
                self.node(loss).shape
            )));
        }
        for (node, g) in self.nodes.iter().zip(self.grads.iter_mut()) {
            if !matches!(node.op, Op::Leaf) {
                *g = None;
            }
        }
        if !self.node(loss).requires_grad {
            return Ok(());
        }
        let nodes = &self.nodes;
        let grads = &mut self.grads;
        accumulate(grads, nodes, loss, |g| g[0] += T::one());

        for idx in (0..=loss.0).rev() {
            let node = &nodes[idx];
            if !node.requires_grad || matches!(node.op, Op::Leaf) {
                continue;
            }
            let Some(g) = grads[idx].take() else {
                continue;
            };
            backprop(nodes, grads, node, &g);
            grads[idx] = Some(g);
        }
        Ok(())
    }
}

fn accumulate<T: Scalar>(
    grads: &mut [Option<Vec<T>>],
    nodes: &[Node<T>],
    v: Var,
    f: impl FnOnce(&mut [T]),
) {
    if !nodes[v.0].requires_grad {
        return;
    }
    let n = nodes[v.0].value.len();
    let g = grads[v.0].get_or_insert_with(|| vec![T::zero(); n]);
    f(g);
}

fn backprop<T: Scalar>(nodes: &[Node<T>], grads: &mut [Option<Vec<T>>], node: &Node<T>, g: &[T]) {
    let val = |v: Var| -> &[T] { &nodes[v.0].value };
    match &node.op {
        Op::Leaf => {}
        Op::MatMul(a, b) => {
            let (sa, sb) = (&nodes[a.0].shape, &nodes[b.0].shape);
            let (va, vb) = (val(*a), val(*b));
            match (sa.as_slice(), sb.as_slice()) {
                ([m, k], [_, n]) => {
                    let (m, k, n) = (*m, *k, *n);
                    // dA = G B^T
                    accumulate(grads, nodes, *a, |ga| {
                        for i in 0..m {
                            let grow = &g[i * n..(i + 1) * n];
                            for p in 0..k {
                                let brow = &vb[p * n..(p + 1) * n];
                                ga[i * k + p] += grow
                                    .iter()
                                    .zip(brow)
                                    .fold(T::zero(), |acc, (&x, &y)| acc + x * y);
                            }
                        }
                    });
                    // dB = A^T G
                    accumulate(grads, nodes, *b, |gb| {
                        for i in 0..m {
                            let grow = &g[i * n..(i + 1) * n];
                            for p in 0..k {
                                let x = va[i * k + p];
                                for (o, &y) in gb[p * n..(p + 1) * n].iter_mut().zip(grow) {
                                    *o += x * y;
                                }
                            }
                        }
                    });
                }
                ([m, k], [_]) => {
                    let (m, k) = (*m, *k);
                    accumulate(grads, nodes, *a, |ga| {
                        for i in 0..m {
                            for p in 0..k {
                                ga[i * k + p] += g[i] * vb[p];
                            }
                        }
                    });
                    accumulate(grads, nodes, *b, |gb| {
                        for i in 0..m {
                            for p in 0..k {
                                gb[p] += va[i * k + p] * g[i];
                            }
                        }
                    });
                }
                ([k], [_, n]) => {
                    let (k, n) = (*k, *n);
                    accumulate(grads, nodes, *a, |ga| {
                        for p in 0..k {
                            ga[p] += vb[p * n..(p + 1) * n]
                                .iter()
                                .zip(g)
                                .fold(T::zero(), |acc, (&x, &y)| acc + x * y);
                        }
                    });
                    accumulate(grads, nodes, *b, |gb| {
                        for p in 0..k {
                            for (o, &y) in gb[p * n..(p + 1) * n].iter_mut().zip(g) {
                                *o += va[p] * y;
                            }
                        }
                    });
                }
                _ => unreachable!("matmul shapes validated in forward"),
            }
        }
        Op::Add(a, b) => {
            add_into(grads, nodes, *a, g, T::one());
            add_into(grads, nodes, *b, g, T::one());
        }
        Op::AddRow(a, b) => {
            add_into(grads, nodes, *a, g, T::one());
            let n = nodes[b.0].value.len();
            accumulate(grads, nodes, *b, |gb| {
                for (i, &x) in g.iter().enumerate() {
                    gb[i % n] += x;
                }
            });
        }
        Op::Sub(a, b) => {
            add_into(grads, nodes, *a, g, T::one());
            add_into(grads, nodes, *b, g, -T::one());
        }
        Op::Mul(a, b) => {
            let (va, vb) = (val(*a), val(*b));
            accumulate(grads, nodes, *a, |ga| {
                for i in 0..g.len() {
                    ga[i] += g[i] * vb[i];
                }
            });
            accumulate(grads, nodes, *b, |gb| {
                for i in 0..g.len() {
                    gb[i] += g[i] * va[i];
                }
            });
        }
        Op::Scale(a, c) => add_into(grads, nodes, *a, g, *c),
        Op::Concat { inputs, axis } => {
            if node.shape.len() == 1 || *axis == 0 {
                let mut offset = 0;
                for &v in inputs {
                    let n = nodes[v.0].value.len();
                    add_into(grads, nodes, v, &g[offset..offset + n], T::one());
                    offset += n;
                }
            } else {
                let (rows, total) = (node.shape[0], node.shape[1]);
                let mut col = 0;
                for &v in inputs {
                    let c = nodes[v.0].shape[1];
                    accumulate(grads, nodes, v, |gv| {
                        for r in 0..rows {
                            for j in 0..c {
                                gv[r * c + j] += g[r * total + col + j];
                            }
                        }
                    });
                    col += c;
                }
            }
        }
        Op::Slice { input, start } => {
            let start = *start;
            accumulate(grads, nodes, *input, |gi| {
                for (o, &x) in gi[start..start + g.len()].iter_mut().zip(g) {
                    *o += x;
                }
            });
        }
        Op::Row { input, row } => {
            let n = g.len();
            let off = row * n;
            accumulate(grads, nodes, *input, |gi| {
                for (o, &x) in gi[off..off + n].iter_mut().zip(g) {
                    *o += x;
                }
            });
        }
        Op::Reshape(a) => add_into(grads, nodes, *a, g, T::one()),
        Op::Sigmoid(a) => {
            let y = &node.value;
            accumulate(grads, nodes, *a, |ga| {
                for i in 0..g.len() {
                    ga[i] += g[i] * y[i] * (T::one() - y[i]);
                }
            });
        }
        Op::Tanh(a) => {
            let y = &node.value;
            accumulate(grads, nodes, *a, |ga| {
                for i in 0..g.len() {
                    ga[i] += g[i] * (T::one() - y[i] * y[i]);
                }
            });
        }
        Op::Relu(a) => {
            let x = val(*a);
            accumulate(grads, nodes, *a, |ga| {
                for i in 0..g.len() {
                    if x[i] > T::zero() {
                        ga[i] += g[i];
                    }
                }
            });
        }
        Op::Softmax(a) => {
            let y = &node.value;
            let n = *node.shape.last().expect("non-empty shape");
            accumulate(grads, nodes, *a, |ga| {
                for ((yr, gr), out) in y.chunks(n).zip(g.chunks(n)).zip(ga.chunks_mut(n)) {
                    let dot: T = yr.iter().zip(gr).map(|(&p, &q)| p * q).sum();
                    for j in 0..n {
                        out[j] += yr[j] * (gr[j] - dot);
                    }
                }
            });
        }
        Op::Sum(a) => {
            let g0 = g[0];
            accumulate(grads, nodes, *a, |ga| ga.iter_mut().for_each(|x| *x += g0));
        }
        Op::Mean(a) => {
            let n = T::of_usize(nodes[a.0].value.len());
            let g0 = g[0] / n;
            accumulate(grads, nodes, *a, |ga| ga.iter_mut().for_each(|x| *x += g0));
        }
        Op::SqDiff(a, b) => {
            let d: Vec<T> = val(*a)
                .iter()
                .zip(val(*b))
                .zip(g)
                .map(|((&x, &y), &gi)| T::of(2.0) * (x - y) * gi)
                .collect();
            add_into(grads, nodes, *a, &d, T::one());
            add_into(grads, nodes, *b, &d, -T::one());
        }
        Op::GradReverse(a, rho) => add_into(grads, nodes, *a, g, -*rho),
        Op::CrossEntropy {
            logits,
            gold,
            probs,
        } => {
            let g0 = g[0];
            accumulate(grads, nodes, *logits, |gl| {
                for (j, &p) in probs.iter().enumerate() {
                    let target = if j == *gold { T::one() } else { T::zero() };
                    gl[j] += g0 * (p - target);
                }
            });
        }
        Op::Mse(a, b) => {
            let n = T::of_usize(nodes[a.0].value.len());
            let c = T::of(2.0) * g[0] / n;
            let d: Vec<T> = val(*a)
                .iter()
                .zip(val(*b))
                .map(|(&x, &y)| c * (x - y))
                .collect();
            add_into(grads, nodes, *a, &d, T::one());
            add_into(grads, nodes, *b, &d, -T::one());
        }
    }
}

fn add_into<T: Scalar>(grads: &mut [Option<Vec<T>>], nodes: &[Node<T>], v: Var, g: &[T], c: T) {
    accumulate(grads, nodes, v, |gv| {
        for (o, &x) in gv.iter_mut().zip(g) {
            *o += c * x;
        }
    });
}

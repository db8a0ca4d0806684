//! Tape of executed operations and the single reverse sweep over it.
//!
//! Nodes are appended in execution order, so walking the tape backwards is a
//! valid reverse topological order. Gradients are only propagated along paths
//! that end in a leaf created with `requires_grad`.

use crate::{NdError, Result, Tensor};

/// Probabilities entering `log` are clamped from below at this value.
pub const LOG_CLAMP: f64 = 1e-12;

/// Handle to a node on a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    AddRow(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    AddScalar(Var),
    Neg(Var),
    Relu(Var),
    Sigmoid(Var),
    Log(Var),
    Square(Var),
    SoftmaxRows(Var),
    Sum(Var),
    Pick(Var, Vec<usize>),
    SliceCols(Var, usize),
}

#[derive(Clone, Debug)]
struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
}

#[derive(Clone, Debug, Default)]
pub struct Graph {
    nodes: Vec<Node>,
    leaf_grads: Vec<Option<Vec<f64>>>,
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

    fn push(&mut self, value: Tensor, op: Op, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        self.leaf_grads.push(None);
        Var(self.nodes.len() - 1)
    }

    fn needs(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    /// Records a leaf. Its gradient is tracked iff `tensor.requires_grad()`.
    pub fn leaf(&mut self, tensor: &Tensor) -> Var {
        let rg = tensor.requires_grad();
        let mut value = tensor.clone();
        value.zero_grad();
        self.push(value, Op::Leaf, rg)
    }

    /// Records a leaf that never receives a gradient.
    pub fn constant(&mut self, tensor: Tensor) -> Var {
        let mut value = tensor.with_requires_grad(false);
        value.zero_grad();
        self.push(value, Op::Leaf, false)
    }

    /// Copies the current value of `v` into a new constant leaf.
    pub fn detach(&mut self, v: Var) -> Var {
        let value = self.nodes[v.0].value.clone();
        self.constant(value)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn values(&self, v: Var) -> &[f64] {
        self.nodes[v.0].value.values()
    }

    /// Accumulated gradient of a leaf, if any backward pass reached it.
    pub fn grad(&self, v: Var) -> Option<&[f64]> {
        self.leaf_grads[v.0].as_deref()
    }

    pub fn zero_grad(&mut self) {
        for g in &mut self.leaf_grads {
            *g = None;
        }
    }

    fn unary(&mut self, a: Var, values: Vec<f64>, op: Op) -> Var {
        let shape = self.nodes[a.0].value.shape().to_vec();
        let rg = self.needs(a);
        let t = Tensor::new(shape, values).expect("unary op preserves shape");
        self.push(t, op, rg)
    }

    fn same_shape(&self, op: &'static str, a: Var, b: Var) -> Result<()> {
        let (sa, sb) = (self.nodes[a.0].value.shape(), self.nodes[b.0].value.shape());
        if sa != sb {
            return Err(NdError::Dimension {
                op,
                lhs: sa.to_vec(),
                rhs: sb.to_vec(),
            });
        }
        Ok(())
    }

    fn binary(&mut self, a: Var, b: Var, values: Vec<f64>, op: Op) -> Var {
        let shape = self.nodes[a.0].value.shape().to_vec();
        let rg = self.needs(a) || self.needs(b);
        let t = Tensor::new(shape, values).expect("binary op preserves shape");
        self.push(t, op, rg)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let ta = &self.nodes[a.0].value;
        let tb = &self.nodes[b.0].value;
        if ta.rank() != 2 || tb.rank() != 2 || ta.shape()[1] != tb.shape()[0] {
            return Err(NdError::Dimension {
                op: "matmul",
                lhs: ta.shape().to_vec(),
                rhs: tb.shape().to_vec(),
            });
        }
        let (m, k) = (ta.shape()[0], ta.shape()[1]);
        let n = tb.shape()[1];
        let out = matmul_raw(ta.values(), tb.values(), m, k, n);
        let rg = self.needs(a) || self.needs(b);
        Ok(self.push(Tensor::new(vec![m, n], out)?, Op::MatMul(a, b), rg))
    }

    /// `x[m×n] + bias[n]`, the bias repeated on every row.
    pub fn add_row(&mut self, x: Var, bias: Var) -> Result<Var> {
        let tx = &self.nodes[x.0].value;
        let tb = &self.nodes[bias.0].value;
        let (_, n) = tx.dims2();
        if tx.rank() != 2 || tb.len() != n {
            return Err(NdError::Dimension {
                op: "add_row",
                lhs: tx.shape().to_vec(),
                rhs: tb.shape().to_vec(),
            });
        }
        let mut out = tx.values().to_vec();
        for row in out.chunks_mut(n) {
            for (o, b) in row.iter_mut().zip(tb.values()) {
                *o += b;
            }
        }
        let shape = tx.shape().to_vec();
        let rg = self.needs(x) || self.needs(bias);
        Ok(self.push(Tensor::new(shape, out)?, Op::AddRow(x, bias), rg))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("add", a, b)?;
        let v = zip_map(self.values(a), self.values(b), |x, y| x + y);
        Ok(self.binary(a, b, v, Op::Add(a, b)))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("sub", a, b)?;
        let v = zip_map(self.values(a), self.values(b), |x, y| x - y);
        Ok(self.binary(a, b, v, Op::Sub(a, b)))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("mul", a, b)?;
        let v = zip_map(self.values(a), self.values(b), |x, y| x * y);
        Ok(self.binary(a, b, v, Op::Mul(a, b)))
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let v = self.values(a).iter().map(|x| x * c).collect();
        self.unary(a, v, Op::Scale(a, c))
    }

    pub fn add_scalar(&mut self, a: Var, c: f64) -> Var {
        let v = self.values(a).iter().map(|x| x + c).collect();
        self.unary(a, v, Op::AddScalar(a))
    }

    pub fn neg(&mut self, a: Var) -> Var {
        let v = self.values(a).iter().map(|x| -x).collect();
        self.unary(a, v, Op::Neg(a))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let v = self.values(a).iter().map(|&x| x.max(0.0)).collect();
        self.unary(a, v, Op::Relu(a))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let v = self.values(a).iter().map(|&x| crate::sigmoid(x)).collect();
        self.unary(a, v, Op::Sigmoid(a))
    }

    /// Natural log of `max(x, LOG_CLAMP)`; the clamped region has zero slope.
    pub fn log(&mut self, a: Var) -> Var {
        let v = self.values(a).iter().map(|&x| x.max(LOG_CLAMP).ln()).collect();
        self.unary(a, v, Op::Log(a))
    }

    pub fn square(&mut self, a: Var) -> Var {
        let v = self.values(a).iter().map(|x| x * x).collect();
        self.unary(a, v, Op::Square(a))
    }

    /// Softmax over the last axis (each row of a matrix, or the whole vector).
    pub fn softmax(&mut self, a: Var) -> Var {
        let t = &self.nodes[a.0].value;
        let (_, n) = t.dims2();
        let mut out = vec![0.0; t.len()];
        if n > 0 {
            for (src, dst) in t.values().chunks(n).zip(out.chunks_mut(n)) {
                crate::softmax_into(src, dst);
            }
        }
        self.unary(a, out, Op::SoftmaxRows(a))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let s = self.values(a).iter().sum();
        let rg = self.needs(a);
        self.push(Tensor::scalar(s), Op::Sum(a), rg)
    }

    pub fn mean(&mut self, a: Var) -> Var {
        let n = self.nodes[a.0].value.len().max(1);
        let s = self.sum(a);
        self.scale(s, 1.0 / n as f64)
    }

    /// Selects `x[i, index[i]]` for every row, giving a vector of length `m`.
    pub fn pick(&mut self, x: Var, index: &[usize]) -> Result<Var> {
        let t = &self.nodes[x.0].value;
        let (m, n) = t.dims2();
        if index.len() != m {
            return Err(NdError::Dimension {
                op: "pick",
                lhs: t.shape().to_vec(),
                rhs: vec![index.len()],
            });
        }
        let mut out = Vec::with_capacity(m);
        for (r, &c) in index.iter().enumerate() {
            if c >= n {
                return Err(NdError::Index { index: c, len: n });
            }
            out.push(t.values()[r * n + c]);
        }
        let rg = self.needs(x);
        Ok(self.push(Tensor::new(vec![m], out)?, Op::Pick(x, index.to_vec()), rg))
    }

    /// Columns `start..end` of a matrix.
    pub fn slice_cols(&mut self, x: Var, start: usize, end: usize) -> Result<Var> {
        let t = &self.nodes[x.0].value;
        let (m, n) = t.dims2();
        if t.rank() != 2 || start > end || end > n {
            return Err(NdError::Dimension {
                op: "slice_cols",
                lhs: t.shape().to_vec(),
                rhs: vec![start, end],
            });
        }
        let w = end - start;
        let mut out = Vec::with_capacity(m * w);
        for r in 0..m {
            out.extend_from_slice(&t.values()[r * n + start..r * n + end]);
        }
        let rg = self.needs(x);
        Ok(self.push(Tensor::new(vec![m, w], out)?, Op::SliceCols(x, start), rg))
    }

    /// Reverse sweep from a scalar `loss`. Leaf gradients accumulate across calls.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        let lt = &self.nodes[loss.0].value;
        if lt.len() != 1 {
            return Err(NdError::NotScalar(lt.shape().to_vec()));
        }
        let mut adj: Vec<Option<Vec<f64>>> = vec![None; loss.0 + 1];
        adj[loss.0] = Some(vec![1.0]);

        for i in (0..=loss.0).rev() {
            if !self.nodes[i].requires_grad {
                continue;
            }
            let Some(g) = adj[i].take() else { continue };
            let node = &self.nodes[i];
            match &node.op {
                Op::Leaf => {
                    let slot = self.leaf_grads[i].get_or_insert_with(|| vec![0.0; g.len()]);
                    for (s, d) in slot.iter_mut().zip(&g) {
                        *s += d;
                    }
                }
                Op::MatMul(a, b) => {
                    let ta = &self.nodes[a.0].value;
                    let tb = &self.nodes[b.0].value;
                    let (m, k) = (ta.shape()[0], ta.shape()[1]);
                    let n = tb.shape()[1];
                    if self.nodes[a.0].requires_grad {
                        // dA = dC · Bᵀ
                        let mut da = vec![0.0; m * k];
                        for r in 0..m {
                            let grow = &g[r * n..(r + 1) * n];
                            for c in 0..k {
                                let brow = &tb.values()[c * n..(c + 1) * n];
                                da[r * k + c] = dot(grow, brow);
                            }
                        }
                        accumulate(&mut adj, *a, da);
                    }
                    if self.nodes[b.0].requires_grad {
                        // dB = Aᵀ · dC
                        let mut db = vec![0.0; k * n];
                        for r in 0..m {
                            let grow = &g[r * n..(r + 1) * n];
                            for c in 0..k {
                                let av = ta.values()[r * k + c];
                                if av != 0.0 {
                                    let dst = &mut db[c * n..(c + 1) * n];
                                    for (d, gv) in dst.iter_mut().zip(grow) {
                                        *d += av * gv;
                                    }
                                }
                            }
                        }
                        accumulate(&mut adj, *b, db);
                    }
                }
                Op::AddRow(x, bias) => {
                    let n = self.nodes[bias.0].value.len();
                    if self.nodes[bias.0].requires_grad {
                        let mut db = vec![0.0; n];
                        for row in g.chunks(n) {
                            for (d, gv) in db.iter_mut().zip(row) {
                                *d += gv;
                            }
                        }
                        accumulate(&mut adj, *bias, db);
                    }
                    if self.nodes[x.0].requires_grad {
                        accumulate(&mut adj, *x, g);
                    }
                }
                Op::Add(a, b) => {
                    if self.nodes[b.0].requires_grad {
                        accumulate(&mut adj, *b, g.clone());
                    }
                    if self.nodes[a.0].requires_grad {
                        accumulate(&mut adj, *a, g);
                    }
                }
                Op::Sub(a, b) => {
                    if self.nodes[b.0].requires_grad {
                        accumulate(&mut adj, *b, g.iter().map(|v| -v).collect());
                    }
                    if self.nodes[a.0].requires_grad {
                        accumulate(&mut adj, *a, g);
                    }
                }
                Op::Mul(a, b) => {
                    let (va, vb) = (self.nodes[a.0].value.values(), self.nodes[b.0].value.values());
                    if self.nodes[a.0].requires_grad {
                        accumulate(&mut adj, *a, zip_map(&g, vb, |d, y| d * y));
                    }
                    if self.nodes[b.0].requires_grad {
                        accumulate(&mut adj, *b, zip_map(&g, va, |d, x| d * x));
                    }
                }
                Op::Scale(a, c) => {
                    let c = *c;
                    accumulate(&mut adj, *a, g.iter().map(|v| v * c).collect());
                }
                Op::AddScalar(a) => accumulate(&mut adj, *a, g),
                Op::Neg(a) => accumulate(&mut adj, *a, g.iter().map(|v| -v).collect()),
                Op::Relu(a) => {
                    let x = self.nodes[a.0].value.values();
                    let d = zip_map(&g, x, |d, x| if x > 0.0 { d } else { 0.0 });
                    accumulate(&mut adj, *a, d);
                }
                Op::Sigmoid(a) => {
                    let y = node.value.values();
                    let d = zip_map(&g, y, |d, y| d * y * (1.0 - y));
                    accumulate(&mut adj, *a, d);
                }
                Op::Log(a) => {
                    let x = self.nodes[a.0].value.values();
                    let d = zip_map(&g, x, |d, x| if x > LOG_CLAMP { d / x } else { 0.0 });
                    accumulate(&mut adj, *a, d);
                }
                Op::Square(a) => {
                    let x = self.nodes[a.0].value.values();
                    accumulate(&mut adj, *a, zip_map(&g, x, |d, x| 2.0 * d * x));
                }
                Op::SoftmaxRows(a) => {
                    let (_, n) = node.value.dims2();
                    let y = node.value.values();
                    let mut d = vec![0.0; y.len()];
                    for ((yr, gr), dr) in y.chunks(n).zip(g.chunks(n)).zip(d.chunks_mut(n)) {
                        let inner = dot(yr, gr);
                        for ((o, &yv), &gv) in dr.iter_mut().zip(yr).zip(gr) {
                            *o = yv * (gv - inner);
                        }
                    }
                    accumulate(&mut adj, *a, d);
                }
                Op::Sum(a) => {
                    let n = self.nodes[a.0].value.len();
                    accumulate(&mut adj, *a, vec![g[0]; n]);
                }
                Op::Pick(x, index) => {
                    let (m, n) = self.nodes[x.0].value.dims2();
                    let mut d = vec![0.0; m * n];
                    for (r, &c) in index.iter().enumerate() {
                        d[r * n + c] = g[r];
                    }
                    accumulate(&mut adj, *x, d);
                }
                Op::SliceCols(x, start) => {
                    let (m, n) = self.nodes[x.0].value.dims2();
                    let w = node.value.dims2().1;
                    let mut d = vec![0.0; m * n];
                    for r in 0..m {
                        d[r * n + start..r * n + start + w].copy_from_slice(&g[r * w..(r + 1) * w]);
                    }
                    accumulate(&mut adj, *x, d);
                }
            }
        }
        Ok(())
    }
}

fn accumulate(adj: &mut [Option<Vec<f64>>], v: Var, delta: Vec<f64>) {
    match &mut adj[v.0] {
        Some(existing) => {
            for (e, d) in existing.iter_mut().zip(&delta) {
                *e += d;
            }
        }
        slot @ None => *slot = Some(delta),
    }
}

fn zip_map(a: &[f64], b: &[f64], f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect()
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Plain `m×k · k×n` product, i-k-j loop order.
pub(crate) fn matmul_raw(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; m * n];
    for r in 0..m {
        let dst = &mut out[r * n..(r + 1) * n];
        for c in 0..k {
            let av = a[r * k + c];
            if av == 0.0 {
                continue;
            }
            for (d, bv) in dst.iter_mut().zip(&b[c * n..(c + 1) * n]) {
                *d += av * bv;
            }
        }
    }
    out
}

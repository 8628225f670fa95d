//! Reverse-mode differentiation over matrix-valued nodes.
//!
//! Nodes are appended in evaluation order, so the node vector is already a
//! topological order and the backward pass is a single reverse sweep. Only the
//! handful of operations needed by the lifted lag-model loss are supported.

use super::matrix::{gemm, Matrix};
use crate::error::{NkdcdError, Result};

/// Slope of the negative branch of [`leaky_relu`].
pub const LEAKY_SLOPE: f64 = 0.1;

/// Elementwise `max(0.1 y, y)`.
pub fn leaky_relu(y: &Matrix) -> Matrix {
    y.map(|v| if v >= 0.0 { v } else { LEAKY_SLOPE * v })
}

/// `x * w + b`, with `b` a `1 x cols` row broadcast over every output row.
pub fn affine_forward(x: &Matrix, w: &Matrix, b: Option<&Matrix>) -> Result<Matrix> {
    let mut out = x.matmul(w)?;
    if let Some(b) = b {
        add_row_broadcast(&mut out, b, "affine_forward")?;
    }
    Ok(out)
}

fn add_row_broadcast(out: &mut Matrix, b: &Matrix, op: &'static str) -> Result<()> {
    if b.rows() != 1 || b.cols() != out.cols() {
        return Err(NkdcdError::shape(op, out.shape(), b.shape()));
    }
    let bias = b.data().to_vec();
    for r in 0..out.rows() {
        out.row_mut(r).iter_mut().zip(&bias).for_each(|(o, v)| *o += v);
    }
    Ok(())
}

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Affine { x: Var, w: Var, b: Option<Var> },
    LeakyRelu(Var),
    Add(Var, Var),
    Sub(Var, Var),
    Scale(Var, f64),
    SquaredNorm(Var),
    MatMul(Var, Var),
    MatMulNt(Var, Var),
    GatherRows { x: Var, idx: Vec<usize> },
    Reshape(Var),
}

#[derive(Debug)]
struct Node {
    op: Op,
    value: Matrix,
    requires_grad: bool,
}

#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Tape { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Registers a differentiable leaf.
    pub fn param(&mut self, value: Matrix) -> Var {
        self.push(Op::Leaf, value, true)
    }

    /// Registers a leaf that never receives a gradient.
    pub fn constant(&mut self, value: Matrix) -> Var {
        self.push(Op::Leaf, value, false)
    }

    pub fn value(&self, v: Var) -> &Matrix {
        &self.nodes[v.0].value
    }

    fn push(&mut self, op: Op, value: Matrix, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            op,
            value,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn rg(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    pub fn affine(&mut self, x: Var, w: Var, b: Option<Var>) -> Result<Var> {
        let value = affine_forward(self.value(x), self.value(w), b.map(|b| self.value(b)))?;
        let rg = self.rg(x) || self.rg(w) || b.is_some_and(|b| self.rg(b));
        Ok(self.push(Op::Affine { x, w, b }, value, rg))
    }

    pub fn leaky_relu(&mut self, x: Var) -> Var {
        let value = leaky_relu(self.value(x));
        let rg = self.rg(x);
        self.push(Op::LeakyRelu(x), value, rg)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.value(a).add(self.value(b))?;
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(Op::Add(a, b), value, rg))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.value(a).sub(self.value(b))?;
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(Op::Sub(a, b), value, rg))
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let value = self.value(a).scale(c);
        let rg = self.rg(a);
        self.push(Op::Scale(a, c), value, rg)
    }

    /// Sum of squared entries, as a `1 x 1` node.
    pub fn squared_norm(&mut self, a: Var) -> Var {
        let value = Matrix::scalar(self.value(a).squared_norm());
        let rg = self.rg(a);
        self.push(Op::SquaredNorm(a), value, rg)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.value(a).matmul(self.value(b))?;
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(Op::MatMul(a, b), value, rg))
    }

    /// `a * b^T`
    pub fn matmul_nt(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.value(a).matmul_nt(self.value(b))?;
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(Op::MatMulNt(a, b), value, rg))
    }

    pub fn gather_rows(&mut self, x: Var, idx: Vec<usize>) -> Result<Var> {
        let value = self.value(x).gather_rows(&idx)?;
        let rg = self.rg(x);
        Ok(self.push(Op::GatherRows { x, idx }, value, rg))
    }

    pub fn reshape(&mut self, x: Var, rows: usize, cols: usize) -> Result<Var> {
        let value = self.value(x).clone().reshape(rows, cols)?;
        let rg = self.rg(x);
        Ok(self.push(Op::Reshape(x), value, rg))
    }

    /// Reverse sweep from a scalar node. Adjoints start at zero for every node.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        let (rows, cols) = self.value(loss).shape();
        if (rows, cols) != (1, 1) {
            return Err(NkdcdError::NonScalarBackward { rows, cols });
        }
        let mut adj: Vec<Option<Matrix>> = vec![None; self.nodes.len()];
        adj[loss.0] = Some(Matrix::scalar(1.0));

        for id in (0..=loss.0).rev() {
            let node = &self.nodes[id];
            if !node.requires_grad {
                continue;
            }
            let Some(g) = adj[id].take() else { continue };
            match &node.op {
                Op::Leaf => {
                    adj[id] = Some(g);
                }
                Op::Affine { x, w, b } => {
                    if self.rg(*x) {
                        let wv = self.value(*w);
                        let mut dx = Matrix::zeros(g.rows(), wv.rows());
                        gemm(1.0, &g, false, wv, true, 0.0, &mut dx);
                        accumulate(&mut adj, *x, dx);
                    }
                    if self.rg(*w) {
                        let xv = self.value(*x);
                        let mut dw = Matrix::zeros(xv.cols(), g.cols());
                        gemm(1.0, xv, true, &g, false, 0.0, &mut dw);
                        accumulate(&mut adj, *w, dw);
                    }
                    if let Some(b) = b {
                        if self.rg(*b) {
                            accumulate(&mut adj, *b, g.column_sums());
                        }
                    }
                }
                Op::LeakyRelu(x) => {
                    let xv = self.value(*x);
                    let mut dx = g;
                    dx.data_mut().iter_mut().zip(xv.data()).for_each(|(d, &v)| {
                        if v < 0.0 {
                            *d *= LEAKY_SLOPE;
                        }
                    });
                    accumulate(&mut adj, *x, dx);
                }
                Op::Add(a, b) => {
                    if self.rg(*b) {
                        accumulate(&mut adj, *b, g.clone());
                    }
                    if self.rg(*a) {
                        accumulate(&mut adj, *a, g);
                    }
                }
                Op::Sub(a, b) => {
                    if self.rg(*b) {
                        accumulate(&mut adj, *b, g.scale(-1.0));
                    }
                    if self.rg(*a) {
                        accumulate(&mut adj, *a, g);
                    }
                }
                Op::Scale(a, c) => {
                    let mut g = g;
                    g.scale_in_place(*c);
                    accumulate(&mut adj, *a, g);
                }
                Op::SquaredNorm(a) => {
                    let s = 2.0 * g.get(0, 0);
                    accumulate(&mut adj, *a, self.value(*a).scale(s));
                }
                Op::MatMul(a, b) => {
                    let (av, bv) = (self.value(*a), self.value(*b));
                    if self.rg(*a) {
                        let mut da = Matrix::zeros(av.rows(), av.cols());
                        gemm(1.0, &g, false, bv, true, 0.0, &mut da);
                        accumulate(&mut adj, *a, da);
                    }
                    if self.rg(*b) {
                        let mut db = Matrix::zeros(bv.rows(), bv.cols());
                        gemm(1.0, av, true, &g, false, 0.0, &mut db);
                        accumulate(&mut adj, *b, db);
                    }
                }
                Op::MatMulNt(a, b) => {
                    let (av, bv) = (self.value(*a), self.value(*b));
                    if self.rg(*a) {
                        let mut da = Matrix::zeros(av.rows(), av.cols());
                        gemm(1.0, &g, false, bv, false, 0.0, &mut da);
                        accumulate(&mut adj, *a, da);
                    }
                    if self.rg(*b) {
                        let mut db = Matrix::zeros(bv.rows(), bv.cols());
                        gemm(1.0, &g, true, av, false, 0.0, &mut db);
                        accumulate(&mut adj, *b, db);
                    }
                }
                Op::GatherRows { x, idx } => {
                    let xv = self.value(*x);
                    let mut dx = Matrix::zeros(xv.rows(), xv.cols());
                    for (k, &r) in idx.iter().enumerate() {
                        dx.row_mut(r).iter_mut().zip(g.row(k)).for_each(|(d, v)| *d += v);
                    }
                    accumulate(&mut adj, *x, dx);
                }
                Op::Reshape(x) => {
                    let (r, c) = self.value(*x).shape();
                    accumulate(&mut adj, *x, g.reshape(r, c)?);
                }
            }
        }
        Ok(Gradients { adj })
    }
}

fn accumulate(adj: &mut [Option<Matrix>], v: Var, g: Matrix) {
    match &mut adj[v.0] {
        Some(existing) => existing
            .data_mut()
            .iter_mut()
            .zip(g.data())
            .for_each(|(a, b)| *a += b),
        slot @ None => *slot = Some(g),
    }
}

/// Adjoints of the leaves after a backward pass.
#[derive(Debug)]
pub struct Gradients {
    adj: Vec<Option<Matrix>>,
}

impl Gradients {
    /// Gradient for a leaf; `None` when the loss does not depend on it.
    pub fn get(&self, v: Var) -> Option<&Matrix> {
        self.adj.get(v.0).and_then(|g| g.as_ref())
    }

    /// Gradient for a leaf, materialising zeros of the leaf's shape when absent.
    pub fn get_or_zeros(&self, tape: &Tape, v: Var) -> Matrix {
        match self.get(v) {
            Some(g) => g.clone(),
            None => {
                let (r, c) = tape.value(v).shape();
                Matrix::zeros(r, c)
            }
        }
    }

    pub fn take(&mut self, tape: &Tape, v: Var) -> Matrix {
        match self.adj.get_mut(v.0).and_then(Option::take) {
            Some(g) => g,
            None => {
                let (r, c) = tape.value(v).shape();
                Matrix::zeros(r, c)
            }
        }
    }
}

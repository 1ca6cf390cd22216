//! Tape-style computation graph with reverse-mode differentiation.
//!
//! Nodes are appended in evaluation order, so the node list is already a
//! topological order and `backward` walks it in reverse. Gradients
//! accumulate with `+=`: a parameter used at several LSTM steps receives
//! the sum of its contributions, and calling `backward` twice without
//! [`Graph::zero_grad`] doubles every gradient.

use std::borrow::Cow;

use super::matrix::{matmul_nt_acc, matmul_tn_acc, Matrix};
use super::AutodiffError;

/// Probabilities below this are clamped inside the log of [`Graph::cross_entropy`].
pub const LOG_CLAMP: f64 = 1e-12;

/// Handle to a node in a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Primitive that produced a node.
#[derive(Clone, Debug, PartialEq)]
pub enum Op {
    Leaf,
    Constant,
    MatMul(Var, Var),
    Add(Var, Var),
    /// Column vector added to every column of a matrix.
    AddBroadcast(Var, Var),
    Hadamard(Var, Var),
    Sigmoid(Var),
    Tanh(Var),
    Softmax(Var),
    CrossEntropy(Var, usize),
    Transpose(Var),
    Column(Var, usize),
    Sum(Var),
}

impl Op {
    fn parents(&self) -> Vec<Var> {
        match *self {
            Op::Leaf | Op::Constant => vec![],
            Op::MatMul(a, b) | Op::Add(a, b) | Op::AddBroadcast(a, b) | Op::Hadamard(a, b) => {
                vec![a, b]
            }
            Op::Sigmoid(a)
            | Op::Tanh(a)
            | Op::Softmax(a)
            | Op::CrossEntropy(a, _)
            | Op::Transpose(a)
            | Op::Column(a, _)
            | Op::Sum(a) => vec![a],
        }
    }
}

#[derive(Clone, Debug)]
struct Node {
    value: Matrix,
    grad: Option<Matrix>,
    op: Op,
    needs_grad: bool,
}

/// Computation graph owning every intermediate value of one forward pass.
#[derive(Clone, Debug, Default)]
pub struct Graph {
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

fn softmax_values(z: &[f64]) -> Vec<f64> {
    let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = z.iter().map(|&x| (x - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
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

    fn push(&mut self, value: Matrix, op: Op) -> Var {
        let needs_grad = match op {
            Op::Leaf => true,
            Op::Constant => false,
            _ => op.parents().iter().any(|p| self.nodes[p.0].needs_grad),
        };
        self.nodes.push(Node {
            value,
            grad: None,
            op,
            needs_grad,
        });
        Var(self.nodes.len() - 1)
    }

    /// Differentiable input (a parameter).
    pub fn leaf(&mut self, value: Matrix) -> Var {
        self.push(value, Op::Leaf)
    }

    /// Input that never receives a gradient.
    pub fn constant(&mut self, value: Matrix) -> Var {
        self.push(value, Op::Constant)
    }

    pub fn value(&self, v: Var) -> &Matrix {
        &self.nodes[v.0].value
    }

    pub fn op(&self, v: Var) -> &Op {
        &self.nodes[v.0].op
    }

    /// Gradient of the last backward root with respect to `v`; zeros when
    /// `v` was unreachable.
    pub fn grad(&self, v: Var) -> Cow<'_, Matrix> {
        let node = &self.nodes[v.0];
        match &node.grad {
            Some(g) => Cow::Borrowed(g),
            None => Cow::Owned(Matrix::zeros(node.value.rows(), node.value.cols())),
        }
    }

    pub fn zero_grad(&mut self) {
        for node in &mut self.nodes {
            node.grad = None;
        }
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        let value = self.value(a).matmul(self.value(b))?;
        Ok(self.push(value, Op::MatMul(a, b)))
    }

    /// Elementwise sum. When `b` is a column vector with as many rows as
    /// `a`, it is broadcast across every column of `a` (bias addition over
    /// a batch); no other broadcasting is supported.
    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        let (sa, sb) = (self.value(a).shape(), self.value(b).shape());
        if sa == sb {
            let mut value = self.value(a).clone();
            value.axpy(1.0, self.value(b));
            return Ok(self.push(value, Op::Add(a, b)));
        }
        if sb.1 == 1 && sb.0 == sa.0 {
            let mut value = self.value(a).clone();
            let bias = self.value(b).as_slice().to_vec();
            let cols = sa.1;
            for (i, row) in value.as_mut_slice().chunks_mut(cols).enumerate() {
                row.iter_mut().for_each(|x| *x += bias[i]);
            }
            return Ok(self.push(value, Op::AddBroadcast(a, b)));
        }
        Err(AutodiffError::shape("add", sa, sb))
    }

    pub fn hadamard(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        let (ma, mb) = (self.value(a), self.value(b));
        if ma.shape() != mb.shape() {
            return Err(AutodiffError::shape("hadamard", ma.shape(), mb.shape()));
        }
        let data = ma
            .as_slice()
            .iter()
            .zip(mb.as_slice())
            .map(|(x, y)| x * y)
            .collect();
        let value = Matrix::from_vec(ma.rows(), ma.cols(), data)?;
        Ok(self.push(value, Op::Hadamard(a, b)))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let value = self.value(a).map(sigmoid);
        self.push(value, Op::Sigmoid(a))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let value = self.value(a).map(f64::tanh);
        self.push(value, Op::Tanh(a))
    }

    /// Softmax over a row or column vector, computed after subtracting the
    /// maximum entry.
    pub fn softmax(&mut self, z: Var) -> Result<Var, AutodiffError> {
        let m = self.value(z);
        if m.is_empty() {
            return Err(AutodiffError::EmptyVector("softmax"));
        }
        if !m.is_vector() {
            return Err(AutodiffError::NotAVector {
                op: "softmax",
                shape: m.shape(),
            });
        }
        let value = Matrix::from_vec(m.rows(), m.cols(), softmax_values(m.as_slice()))?;
        Ok(self.push(value, Op::Softmax(z)))
    }

    /// `-ln(max(p[target], 1e-12))` for a probability vector `p`.
    pub fn cross_entropy(&mut self, pred: Var, target: usize) -> Result<Var, AutodiffError> {
        let p = self.value(pred);
        if !p.is_vector() {
            return Err(AutodiffError::NotAVector {
                op: "cross_entropy",
                shape: p.shape(),
            });
        }
        if target >= p.len() {
            return Err(AutodiffError::IndexOutOfRange {
                index: target,
                len: p.len(),
            });
        }
        let loss = -p.as_slice()[target].max(LOG_CLAMP).ln();
        Ok(self.push(Matrix::filled(1, 1, loss), Op::CrossEntropy(pred, target)))
    }

    pub fn transpose(&mut self, a: Var) -> Var {
        let value = self.value(a).transpose();
        self.push(value, Op::Transpose(a))
    }

    /// Column `j` of `a` as a column vector.
    pub fn column(&mut self, a: Var, j: usize) -> Result<Var, AutodiffError> {
        let m = self.value(a);
        if j >= m.cols() {
            return Err(AutodiffError::IndexOutOfRange {
                index: j,
                len: m.cols(),
            });
        }
        let value = Matrix::column_vector(&m.column(j));
        Ok(self.push(value, Op::Column(a, j)))
    }

    /// Sum of all entries as a `1 x 1` node.
    pub fn sum(&mut self, a: Var) -> Var {
        let total = self.value(a).sum();
        self.push(Matrix::filled(1, 1, total), Op::Sum(a))
    }

    /// Accumulates `d root / d node` into every node reachable from `root`.
    pub fn backward(&mut self, root: Var) -> Result<(), AutodiffError> {
        let shape = self.value(root).shape();
        if shape != (1, 1) {
            return Err(AutodiffError::NonScalarRoot { shape });
        }
        let mut reachable = vec![false; root.0 + 1];
        reachable[root.0] = true;
        for i in (0..=root.0).rev() {
            if !reachable[i] {
                continue;
            }
            for p in self.nodes[i].op.parents() {
                reachable[p.0] = true;
            }
        }

        // Per-call upstream gradients, so repeated calls accumulate rather
        // than re-propagate stale totals.
        let mut upstream: Vec<Option<Matrix>> = vec![None; root.0 + 1];
        upstream[root.0] = Some(Matrix::filled(1, 1, 1.0));
        for i in (0..=root.0).rev() {
            if !reachable[i] {
                continue;
            }
            let Some(g) = upstream[i].take() else {
                continue;
            };
            let op = self.nodes[i].op.clone();
            self.propagate(i, &op, &g, &mut upstream);
            match &mut self.nodes[i].grad {
                Some(total) => total.axpy(1.0, &g),
                slot @ None => *slot = Some(g),
            }
        }
        Ok(())
    }

    fn accumulate(
        &self,
        upstream: &mut [Option<Matrix>],
        target: Var,
        f: impl FnOnce(&mut Matrix),
    ) {
        if !self.nodes[target.0].needs_grad {
            return;
        }
        let slot = &mut upstream[target.0];
        if slot.is_none() {
            let (r, c) = self.nodes[target.0].value.shape();
            *slot = Some(Matrix::zeros(r, c));
        }
        f(slot.as_mut().expect("slot initialised above"));
    }

    fn propagate(&self, i: usize, op: &Op, g: &Matrix, upstream: &mut [Option<Matrix>]) {
        let out = &self.nodes[i].value;
        match *op {
            Op::Leaf | Op::Constant => {}
            Op::MatMul(a, b) => {
                let (va, vb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
                self.accumulate(upstream, a, |ga| matmul_nt_acc(g, vb, ga));
                self.accumulate(upstream, b, |gb| matmul_tn_acc(va, g, gb));
            }
            Op::Add(a, b) => {
                self.accumulate(upstream, a, |ga| ga.axpy(1.0, g));
                self.accumulate(upstream, b, |gb| gb.axpy(1.0, g));
            }
            Op::AddBroadcast(a, b) => {
                self.accumulate(upstream, a, |ga| ga.axpy(1.0, g));
                self.accumulate(upstream, b, |gb| {
                    let cols = g.cols();
                    for (r, row) in g.as_slice().chunks(cols).enumerate() {
                        gb.as_mut_slice()[r] += row.iter().sum::<f64>();
                    }
                });
            }
            Op::Hadamard(a, b) => {
                let (va, vb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
                self.accumulate(upstream, a, |ga| {
                    for ((x, gi), bi) in ga
                        .as_mut_slice()
                        .iter_mut()
                        .zip(g.as_slice())
                        .zip(vb.as_slice())
                    {
                        *x += gi * bi;
                    }
                });
                self.accumulate(upstream, b, |gb| {
                    for ((x, gi), ai) in gb
                        .as_mut_slice()
                        .iter_mut()
                        .zip(g.as_slice())
                        .zip(va.as_slice())
                    {
                        *x += gi * ai;
                    }
                });
            }
            Op::Sigmoid(a) => self.accumulate(upstream, a, |ga| {
                for ((x, gi), s) in ga
                    .as_mut_slice()
                    .iter_mut()
                    .zip(g.as_slice())
                    .zip(out.as_slice())
                {
                    *x += gi * s * (1.0 - s);
                }
            }),
            Op::Tanh(a) => self.accumulate(upstream, a, |ga| {
                for ((x, gi), t) in ga
                    .as_mut_slice()
                    .iter_mut()
                    .zip(g.as_slice())
                    .zip(out.as_slice())
                {
                    *x += gi * (1.0 - t * t);
                }
            }),
            Op::Softmax(z) => self.accumulate(upstream, z, |gz| {
                // J^T g = p * (g - <g, p>)
                let p = out.as_slice();
                let dot: f64 = g.as_slice().iter().zip(p).map(|(gi, pi)| gi * pi).sum();
                for ((x, gi), pi) in gz.as_mut_slice().iter_mut().zip(g.as_slice()).zip(p) {
                    *x += pi * (gi - dot);
                }
            }),
            Op::CrossEntropy(pred, target) => {
                let p = self.nodes[pred.0].value.as_slice()[target];
                if p > LOG_CLAMP {
                    let scale = g.as_slice()[0];
                    self.accumulate(upstream, pred, |gp| {
                        gp.as_mut_slice()[target] -= scale / p;
                    });
                }
            }
            Op::Transpose(a) => self.accumulate(upstream, a, |ga| ga.axpy(1.0, &g.transpose())),
            Op::Column(a, j) => self.accumulate(upstream, a, |ga| {
                let cols = ga.cols();
                for (r, gi) in g.as_slice().iter().enumerate() {
                    ga.as_mut_slice()[r * cols + j] += gi;
                }
            }),
            Op::Sum(a) => {
                let s = g.as_slice()[0];
                self.accumulate(upstream, a, |ga| {
                    ga.as_mut_slice().iter_mut().for_each(|x| *x += s)
                });
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn add_zero_is_identity() {
        let mut g = Graph::new();
        let x = g.leaf(Matrix::from_vec(2, 2, vec![1.0, -2.0, 3.5, 0.25]).unwrap());
        let z = g.constant(Matrix::zeros(2, 2));
        let y = g.add(x, z).unwrap();
        assert_eq!(g.value(y), g.value(x));
    }

    #[test]
    fn add_broadcasts_column_bias() {
        let mut g = Graph::new();
        let x = g.leaf(Matrix::zeros(2, 3));
        let b = g.leaf(Matrix::column_vector(&[1.0, 2.0]));
        let y = g.add(x, b).unwrap();
        assert_eq!(g.value(y).as_slice(), &[1.0, 1.0, 1.0, 2.0, 2.0, 2.0]);
        let s = g.sum(y);
        g.backward(s).unwrap();
        assert_eq!(g.grad(b).as_slice(), &[3.0, 3.0]);
    }

    #[test]
    fn add_rejects_other_shapes() {
        let mut g = Graph::new();
        let x = g.leaf(Matrix::zeros(2, 3));
        let b = g.leaf(Matrix::zeros(3, 1));
        assert!(matches!(g.add(x, b), Err(AutodiffError::Shape { .. })));
    }

    #[test]
    fn hadamard_masks() {
        let mut g = Graph::new();
        let a = g.leaf(Matrix::row_vector(&[1.0, 0.0]));
        let b = g.leaf(Matrix::row_vector(&[5.0, 7.0]));
        let y = g.hadamard(a, b).unwrap();
        assert_eq!(g.value(y).as_slice(), &[5.0, 0.0]);
    }

    #[test]
    fn activations_at_reference_points() {
        let mut g = Graph::new();
        let x = g.leaf(Matrix::row_vector(&[0.0, 3f64.ln()]));
        let s = g.sigmoid(x);
        let t = g.tanh(x);
        assert_eq!(g.value(s).as_slice()[0], 0.5);
        assert!(close(g.value(s).as_slice()[1], 0.75, 1e-15));
        assert_eq!(g.value(t).as_slice()[0], 0.0);
    }

    #[test]
    fn activations_saturate_without_overflow() {
        let mut g = Graph::new();
        let x = g.leaf(Matrix::row_vector(&[-700.0, 700.0, -50.0, 50.0]));
        let s = g.sigmoid(x);
        let t = g.tanh(x);
        assert!(g.value(s).all_finite());
        assert!(g.value(t).all_finite());
        assert_eq!(g.value(s).as_slice()[1], 1.0);
        let total = g.sum(s);
        g.backward(total).unwrap();
        assert!(g.grad(x).all_finite());
    }

    #[test]
    fn softmax_reference_values() {
        let mut g = Graph::new();
        let z = g.leaf(Matrix::row_vector(&[0.0, 0.0]));
        let p = g.softmax(z).unwrap();
        assert_eq!(g.value(p).as_slice(), &[0.5, 0.5]);

        let z = g.leaf(Matrix::column_vector(&[0.0, 3f64.ln()]));
        let p = g.softmax(z).unwrap();
        assert!(close(g.value(p).as_slice()[0], 0.25, 1e-12));
        assert!(close(g.value(p).as_slice()[1], 0.75, 1e-12));
    }

    #[test]
    fn softmax_rejects_empty_and_matrices() {
        let mut g = Graph::new();
        let e = g.leaf(Matrix::zeros(0, 1));
        assert!(matches!(g.softmax(e), Err(AutodiffError::EmptyVector(_))));
        let m = g.leaf(Matrix::zeros(2, 2));
        assert!(matches!(
            g.softmax(m),
            Err(AutodiffError::NotAVector { .. })
        ));
    }

    #[test]
    fn cross_entropy_reference_values() {
        let mut g = Graph::new();
        let p = g.constant(Matrix::one_hot(4, 2));
        let l = g.cross_entropy(p, 2).unwrap();
        assert_eq!(g.value(l).as_slice()[0], 0.0);

        let u = g.constant(Matrix::filled(4, 1, 0.25));
        let l = g.cross_entropy(u, 1).unwrap();
        assert!(close(g.value(l).as_slice()[0], 4f64.ln(), 1e-15));

        let l = g.cross_entropy(p, 0).unwrap();
        assert!(close(g.value(l).as_slice()[0], -LOG_CLAMP.ln(), 1e-12));

        assert!(matches!(
            g.cross_entropy(u, 4),
            Err(AutodiffError::IndexOutOfRange { index: 4, len: 4 })
        ));
    }

    #[test]
    fn cross_entropy_gradient_at_logits_is_p_minus_onehot() {
        let mut g = Graph::new();
        let z = g.leaf(Matrix::column_vector(&[0.3, -1.2, 2.0]));
        let p = g.softmax(z).unwrap();
        let l = g.cross_entropy(p, 0).unwrap();
        g.backward(l).unwrap();
        let probs = g.value(p).clone();
        let grad = g.grad(z).into_owned();
        for k in 0..3 {
            let expected = probs.as_slice()[k] - if k == 0 { 1.0 } else { 0.0 };
            assert!(close(grad.as_slice()[k], expected, 1e-12));
        }
    }

    #[test]
    fn sum_root_gives_ones() {
        let mut g = Graph::new();
        let x = g.leaf(Matrix::zeros(2, 3));
        let s = g.sum(x);
        g.backward(s).unwrap();
        assert_eq!(g.grad(x).as_slice(), &[1.0; 6]);
    }

    #[test]
    fn disconnected_node_has_zero_grad() {
        let mut g = Graph::new();
        let x = g.leaf(Matrix::filled(1, 2, 2.0));
        let lonely = g.leaf(Matrix::filled(2, 2, 5.0));
        let s = g.sum(x);
        g.backward(s).unwrap();
        assert_eq!(g.grad(lonely).as_slice(), &[0.0; 4]);
    }

    #[test]
    fn repeated_backward_accumulates() {
        let mut g = Graph::new();
        let x = g.leaf(Matrix::filled(1, 2, 2.0));
        let y = g.hadamard(x, x).unwrap();
        let s = g.sum(y);
        g.backward(s).unwrap();
        assert_eq!(g.grad(x).as_slice(), &[4.0, 4.0]);
        g.backward(s).unwrap();
        assert_eq!(g.grad(x).as_slice(), &[8.0, 8.0]);
        g.zero_grad();
        g.backward(s).unwrap();
        assert_eq!(g.grad(x).as_slice(), &[4.0, 4.0]);
    }

    #[test]
    fn non_scalar_root_is_rejected() {
        let mut g = Graph::new();
        let x = g.leaf(Matrix::zeros(2, 1));
        assert!(matches!(
            g.backward(x),
            Err(AutodiffError::NonScalarRoot { .. })
        ));
    }

    #[test]
    fn constants_receive_no_gradient() {
        let mut g = Graph::new();
        let w = g.leaf(Matrix::filled(1, 2, 1.0));
        let x = g.constant(Matrix::column_vector(&[3.0, 4.0]));
        let y = g.matmul(w, x).unwrap();
        g.backward(y).unwrap();
        assert_eq!(g.grad(w).as_slice(), &[3.0, 4.0]);
        assert_eq!(g.grad(x).as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn column_selects_and_routes_gradient() {
        let mut g = Graph::new();
        let a = g.leaf(Matrix::from_vec(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap());
        let c = g.column(a, 1).unwrap();
        assert_eq!(g.value(c).as_slice(), &[2.0, 5.0]);
        let s = g.sum(c);
        g.backward(s).unwrap();
        assert_eq!(g.grad(a).as_slice(), &[0.0, 1.0, 0.0, 0.0, 1.0, 0.0]);
        assert!(g.column(a, 3).is_err());
    }
}

//! A small reverse-mode autodiff tape over [`DenseMatrix`] values.
//!
//! Each forward primitive appends one node holding its value and the ids of
//! its inputs; inputs always precede outputs, so walking the node list
//! backwards is a valid reverse topological order. A tape is meant to live
//! for exactly one training step: after [`Tape::backward`] it is consumed and
//! must be [`reset`](Tape::reset) (or dropped) before reuse.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{matmul, matmul_transpose_a, matmul_transpose_b, DenseMatrix};

/// Handle to a node recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn id(self) -> usize {
        self.0
    }
}

#[derive(Debug)]
enum Op {
    Leaf,
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    MatMul(usize, usize),
    Transpose(usize),
    Relu(usize),
    Softplus(usize),
    Sqrt(usize),
    Scale(usize, f64),
    AddScalar(usize),
    Sum(usize),
    Mean(usize),
    WeightedSum(usize, DenseMatrix),
    RowSquaredDistance(usize, Vec<f64>),
    ConcatColumns(Vec<usize>),
    SelectRows(usize, Vec<usize>),
    AddRow(usize, usize),
    NeighborSum {
        input: usize,
        adjacency: Arc<Vec<Vec<usize>>>,
        self_weight: f64,
    },
    SegmentSum {
        input: usize,
        segments: Arc<Vec<usize>>,
    },
}

#[derive(Debug)]
struct Node {
    value: DenseMatrix,
    op: Op,
    requires_grad: bool,
}

#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
    consumed: bool,
}

/// Gradients produced by one backward pass, indexed by [`Var`].
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<DenseMatrix>>,
}

impl Gradients {
    pub fn get(&self, var: Var) -> Option<&DenseMatrix> {
        self.grads.get(var.0).and_then(Option::as_ref)
    }
}

/// Numerically stable `log(1 + e^z)`.
pub fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Drop all recorded nodes so the tape can be reused.
    pub fn reset(&mut self) {
        self.nodes.clear();
        self.consumed = false;
    }

    pub fn value(&self, var: Var) -> &DenseMatrix {
        &self.nodes[var.0].value
    }

    /// Trainable leaf.
    pub fn param(&mut self, value: DenseMatrix) -> Var {
        self.leaf(value, true)
    }

    /// Leaf that never receives a gradient.
    pub fn constant(&mut self, value: DenseMatrix) -> Var {
        self.leaf(value, false)
    }

    fn leaf(&mut self, value: DenseMatrix, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op: Op::Leaf,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn push(&mut self, value: DenseMatrix, op: Op, inputs: &[usize]) -> Var {
        let requires_grad = inputs.iter().any(|&i| self.nodes[i].requires_grad);
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let v = self.value(a).add(self.value(b))?;
        Ok(self.push(v, Op::Add(a.0, b.0), &[a.0, b.0]))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let v = self.value(a).sub(self.value(b))?;
        Ok(self.push(v, Op::Sub(a.0, b.0), &[a.0, b.0]))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let v = self.value(a).hadamard(self.value(b))?;
        Ok(self.push(v, Op::Mul(a.0, b.0), &[a.0, b.0]))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let v = matmul(self.value(a), self.value(b))?;
        Ok(self.push(v, Op::MatMul(a.0, b.0), &[a.0, b.0]))
    }

    pub fn transpose(&mut self, a: Var) -> Var {
        let v = self.value(a).transpose();
        self.push(v, Op::Transpose(a.0), &[a.0])
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let v = self.value(a).map(|x| x.max(0.0));
        self.push(v, Op::Relu(a.0), &[a.0])
    }

    /// Smallest `|x|` over all inputs of recorded relus, i.e. how far the
    /// current point is from the nearest kink. `None` without relus.
    pub fn relu_margin(&self) -> Option<f64> {
        self.nodes
            .iter()
            .filter_map(|n| match n.op {
                Op::Relu(a) => Some(self.nodes[a].value.values().iter().fold(f64::INFINITY, |m, x| m.min(x.abs()))),
                _ => None,
            })
            .reduce(f64::min)
    }

    pub fn softplus(&mut self, a: Var) -> Var {
        let v = self.value(a).map(softplus);
        self.push(v, Op::Softplus(a.0), &[a.0])
    }

    /// Elementwise square root; the gradient at exactly zero is taken as 0.
    pub fn sqrt(&mut self, a: Var) -> Result<Var> {
        if let Some(bad) = self.value(a).values().iter().find(|&&x| x < 0.0) {
            return Err(Error::Numeric(format!("sqrt of negative value {bad}")));
        }
        let v = self.value(a).map(f64::sqrt);
        Ok(self.push(v, Op::Sqrt(a.0), &[a.0]))
    }

    pub fn scale(&mut self, a: Var, factor: f64) -> Var {
        let v = self.value(a).scale(factor);
        self.push(v, Op::Scale(a.0, factor), &[a.0])
    }

    pub fn add_scalar(&mut self, a: Var, offset: f64) -> Var {
        let v = self.value(a).map(|x| x + offset);
        self.push(v, Op::AddScalar(a.0), &[a.0])
    }

    /// Sum of all entries, as a 1x1 value.
    pub fn sum(&mut self, a: Var) -> Var {
        let v = DenseMatrix::scalar(self.value(a).sum());
        self.push(v, Op::Sum(a.0), &[a.0])
    }

    pub fn mean(&mut self, a: Var) -> Result<Var> {
        let m = self.value(a);
        let n = m.rows() * m.cols();
        if n == 0 {
            return Err(Error::shape("mean", "empty input"));
        }
        let v = DenseMatrix::scalar(m.sum() / n as f64);
        Ok(self.push(v, Op::Mean(a.0), &[a.0]))
    }

    /// `Σ weights ⊙ a` with constant weights, as a 1x1 value.
    pub fn weighted_sum(&mut self, a: Var, weights: DenseMatrix) -> Result<Var> {
        let v = DenseMatrix::scalar(self.value(a).hadamard(&weights)?.sum());
        Ok(self.push(v, Op::WeightedSum(a.0, weights), &[a.0]))
    }

    /// Squared Euclidean distance of every row to a constant vector (n x 1).
    pub fn row_squared_distance(&mut self, a: Var, center: &[f64]) -> Result<Var> {
        let m = self.value(a);
        if center.len() != m.cols() {
            return Err(Error::shape(
                "row_squared_distance",
                format!("center of length {} for {} columns", center.len(), m.cols()),
            ));
        }
        let d: Vec<f64> = (0..m.rows())
            .map(|r| {
                m.row(r)
                    .iter()
                    .zip(center)
                    .map(|(x, c)| (x - c) * (x - c))
                    .sum()
            })
            .collect();
        Ok(self.push(
            DenseMatrix::column_vector(d),
            Op::RowSquaredDistance(a.0, center.to_vec()),
            &[a.0],
        ))
    }

    pub fn concat_columns(&mut self, parts: &[Var]) -> Result<Var> {
        let mats: Vec<&DenseMatrix> = parts.iter().map(|&p| self.value(p)).collect();
        let v = DenseMatrix::hcat(&mats)?;
        let ids: Vec<usize> = parts.iter().map(|p| p.0).collect();
        Ok(self.push(v, Op::ConcatColumns(ids.clone()), &ids))
    }

    pub fn select_rows(&mut self, a: Var, indices: &[usize]) -> Result<Var> {
        let v = self.value(a).select_rows(indices)?;
        Ok(self.push(v, Op::SelectRows(a.0, indices.to_vec()), &[a.0]))
    }

    /// Broadcast-add a 1 x c row to every row of `a`.
    pub fn add_row(&mut self, a: Var, row: Var) -> Result<Var> {
        let (m, r) = (self.value(a), self.value(row));
        if r.rows() != 1 || r.cols() != m.cols() {
            return Err(Error::shape(
                "add_row",
                format!("{}x{} row for {} columns", r.rows(), r.cols(), m.cols()),
            ));
        }
        let mut v = m.clone();
        for i in 0..v.rows() {
            for (x, b) in v.row_mut(i).iter_mut().zip(r.values()) {
                *x += b;
            }
        }
        Ok(self.push(v, Op::AddRow(a.0, row.0), &[a.0, row.0]))
    }

    /// GIN aggregation: `out_i = self_weight * a_i + Σ_{j ∈ adjacency[i]} a_j`.
    pub fn neighbor_sum(
        &mut self,
        a: Var,
        adjacency: Arc<Vec<Vec<usize>>>,
        self_weight: f64,
    ) -> Result<Var> {
        let m = self.value(a);
        if adjacency.len() != m.rows() {
            return Err(Error::shape(
                "neighbor_sum",
                format!("adjacency over {} nodes for {} rows", adjacency.len(), m.rows()),
            ));
        }
        let mut v = m.scale(self_weight);
        for (i, nbrs) in adjacency.iter().enumerate() {
            for &j in nbrs {
                if j >= m.rows() {
                    return Err(Error::shape("neighbor_sum", format!("neighbor {j} out of range")));
                }
                let (src, dst) = (m.row(j), v.row_mut(i));
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += s;
                }
            }
        }
        Ok(self.push(
            v,
            Op::NeighborSum {
                input: a.0,
                adjacency,
                self_weight,
            },
            &[a.0],
        ))
    }

    /// Sum rows by segment id: `out_s = Σ_{i: segments[i] = s} a_i`.
    pub fn segment_sum(&mut self, a: Var, segments: Arc<Vec<usize>>, count: usize) -> Result<Var> {
        let m = self.value(a);
        if segments.len() != m.rows() {
            return Err(Error::shape(
                "segment_sum",
                format!("{} segment ids for {} rows", segments.len(), m.rows()),
            ));
        }
        let mut v = DenseMatrix::zeros(count, m.cols());
        for (i, &s) in segments.iter().enumerate() {
            if s >= count {
                return Err(Error::shape("segment_sum", format!("segment {s} >= {count}")));
            }
            for (d, x) in v.row_mut(s).iter_mut().zip(m.row(i)) {
                *d += x;
            }
        }
        Ok(self.push(v, Op::SegmentSum { input: a.0, segments }, &[a.0]))
    }

    /// Reverse pass from a scalar `loss`. Consumes the tape: a second call
    /// without [`reset`](Tape::reset) is an error.
    pub fn backward(&mut self, loss: Var) -> Result<Gradients> {
        if self.consumed {
            return Err(Error::Contract(
                "backward called twice on the same tape without reset".into(),
            ));
        }
        let shape = self.value(loss).shape();
        if shape != (1, 1) {
            return Err(Error::Contract(format!(
                "backward needs a scalar loss, got {}x{}",
                shape.0, shape.1
            )));
        }
        self.consumed = true;

        let mut grads: Vec<Option<DenseMatrix>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(DenseMatrix::scalar(1.0));

        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            let node = &self.nodes[idx];
            if !node.requires_grad {
                grads[idx] = Some(g);
                continue;
            }
            let nodes = &self.nodes;
            let mut send = |target: usize, contribution: DenseMatrix| {
                if !nodes[target].requires_grad {
                    return;
                }
                match &mut grads[target] {
                    Some(acc) => acc.axpy(1.0, &contribution).expect("gradient shapes match"),
                    slot @ None => *slot = Some(contribution),
                }
            };
            let val = |i: usize| &nodes[i].value;

            match &node.op {
                Op::Leaf => {}
                Op::Add(a, b) => {
                    send(*a, g.clone());
                    send(*b, g.clone());
                }
                Op::Sub(a, b) => {
                    send(*a, g.clone());
                    send(*b, g.scale(-1.0));
                }
                Op::Mul(a, b) => {
                    send(*a, g.hadamard(val(*b))?);
                    send(*b, g.hadamard(val(*a))?);
                }
                Op::MatMul(a, b) => {
                    send(*a, matmul_transpose_b(&g, val(*b))?);
                    send(*b, matmul_transpose_a(val(*a), &g)?);
                }
                Op::Transpose(a) => send(*a, g.transpose()),
                Op::Relu(a) => {
                    let mask = val(*a).map(|x| if x > 0.0 { 1.0 } else { 0.0 });
                    send(*a, g.hadamard(&mask)?);
                }
                Op::Softplus(a) => {
                    let d = val(*a).map(sigmoid);
                    send(*a, g.hadamard(&d)?);
                }
                Op::Sqrt(a) => {
                    let d = node.value.map(|y| if y > 0.0 { 0.5 / y } else { 0.0 });
                    send(*a, g.hadamard(&d)?);
                }
                Op::Scale(a, f) => send(*a, g.scale(*f)),
                Op::AddScalar(a) => send(*a, g.clone()),
                Op::Sum(a) => {
                    let (r, c) = val(*a).shape();
                    send(*a, DenseMatrix::filled(r, c, g.values()[0]));
                }
                Op::Mean(a) => {
                    let (r, c) = val(*a).shape();
                    send(*a, DenseMatrix::filled(r, c, g.values()[0] / (r * c) as f64));
                }
                Op::WeightedSum(a, w) => send(*a, w.scale(g.values()[0])),
                Op::RowSquaredDistance(a, center) => {
                    let x = val(*a);
                    let mut d = DenseMatrix::zeros(x.rows(), x.cols());
                    for r in 0..x.rows() {
                        let gr = g.get(r, 0);
                        for ((o, xi), c) in d.row_mut(r).iter_mut().zip(x.row(r)).zip(center) {
                            *o = 2.0 * gr * (xi - c);
                        }
                    }
                    send(*a, d);
                }
                Op::ConcatColumns(parts) => {
                    let mut offset = 0;
                    for &p in parts {
                        let width = val(p).cols();
                        let mut piece = DenseMatrix::zeros(g.rows(), width);
                        for r in 0..g.rows() {
                            piece
                                .row_mut(r)
                                .copy_from_slice(&g.row(r)[offset..offset + width]);
                        }
                        offset += width;
                        send(p, piece);
                    }
                }
                Op::SelectRows(a, indices) => {
                    let (r, c) = val(*a).shape();
                    let mut d = DenseMatrix::zeros(r, c);
                    for (k, &i) in indices.iter().enumerate() {
                        for (o, x) in d.row_mut(i).iter_mut().zip(g.row(k)) {
                            *o += x;
                        }
                    }
                    send(*a, d);
                }
                Op::AddRow(a, row) => {
                    let mut col_sums = DenseMatrix::zeros(1, g.cols());
                    for r in 0..g.rows() {
                        for (s, x) in col_sums.values_mut().iter_mut().zip(g.row(r)) {
                            *s += x;
                        }
                    }
                    send(*a, g.clone());
                    send(*row, col_sums);
                }
                Op::NeighborSum {
                    input,
                    adjacency,
                    self_weight,
                } => {
                    let mut d = g.scale(*self_weight);
                    for (i, nbrs) in adjacency.iter().enumerate() {
                        for &j in nbrs {
                            let (src, dst) = (g.row(i), d.row_mut(j));
                            for (o, x) in dst.iter_mut().zip(src) {
                                *o += x;
                            }
                        }
                    }
                    send(*input, d);
                }
                Op::SegmentSum { input, segments } => {
                    let cols = g.cols();
                    let mut d = DenseMatrix::zeros(segments.len(), cols);
                    for (i, &s) in segments.iter().enumerate() {
                        d.row_mut(i).copy_from_slice(g.row(s));
                    }
                    send(*input, d);
                }
            }
            grads[idx] = Some(g);
        }
        Ok(Gradients { grads })
    }
}

/// A trainable tensor with its gradient slot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "DenseMatrix", into = "DenseMatrix")]
pub struct Parameter {
    pub value: DenseMatrix,
    pub grad: DenseMatrix,
}

impl From<DenseMatrix> for Parameter {
    fn from(value: DenseMatrix) -> Self {
        Parameter::new(value)
    }
}

impl From<Parameter> for DenseMatrix {
    fn from(p: Parameter) -> Self {
        p.value
    }
}

impl Parameter {
    pub fn new(value: DenseMatrix) -> Self {
        let grad = DenseMatrix::zeros(value.rows(), value.cols());
        Self { value, grad }
    }

    /// Add the gradient recorded for `var` (if any) into the slot.
    pub fn accumulate(&mut self, grads: &Gradients, var: Var) -> Result<()> {
        if let Some(g) = grads.get(var) {
            self.grad.axpy(1.0, g)?;
        }
        Ok(())
    }

    pub fn zero_grad(&mut self) {
        self.grad.values_mut().fill(0.0);
    }

    pub fn squared_norm(&self) -> f64 {
        self.value.values().iter().map(|v| v * v).sum()
    }
}

/// `(μ/2) Σ ‖Q‖_F²` over the given tensors.
pub fn decay_penalty<'a>(params: impl IntoIterator<Item = &'a Parameter>, weight_decay: f64) -> f64 {
    0.5 * weight_decay * params.into_iter().map(Parameter::squared_norm).sum::<f64>()
}

/// Global L2 norm of the accumulated gradients.
pub fn grad_norm(params: &[&mut Parameter]) -> f64 {
    params
        .iter()
        .flat_map(|p| p.grad.values())
        .map(|g| g * g)
        .sum::<f64>()
        .sqrt()
}

/// Rescale all gradients so their global norm is at most `max_norm`.
/// Returns the norm before clipping.
pub fn clip_grad_norm(params: &mut [&mut Parameter], max_norm: f64) -> f64 {
    let norm = grad_norm(params);
    if norm > max_norm {
        let factor = max_norm / norm;
        for p in params.iter_mut() {
            p.grad.values_mut().iter_mut().for_each(|g| *g *= factor);
        }
    }
    norm
}

/// Plain SGD with decoupled-from-the-tape weight decay:
/// `p ← p − lr·(grad + μ·p)`, then the gradient slots are zeroed.
pub fn sgd_step(params: &mut [&mut Parameter], learning_rate: f64, weight_decay: f64) {
    for p in params.iter_mut() {
        let Parameter { value, grad } = &mut **p;
        for (v, g) in value.values_mut().iter_mut().zip(grad.values()) {
            *v -= learning_rate * (g + weight_decay * *v);
        }
        p.zero_grad();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_param(tape: &mut Tape, values: &[f64]) -> Var {
        tape.param(DenseMatrix::row_vector(values.to_vec()))
    }

    #[test]
    fn softplus_and_relu_values() {
        assert!((softplus(0.0) - std::f64::consts::LN_2).abs() < 1e-15);
        assert!(softplus(1000.0).is_finite());
        assert_eq!(softplus(-1000.0), 0.0);
        let mut tape = Tape::new();
        let x = scalar_param(&mut tape, &[-1.5, 2.0]);
        let y = tape.relu(x);
        assert_eq!(tape.value(y).values(), &[0.0, 2.0]);
    }

    #[test]
    fn relu_margin_reports_nearest_kink() {
        let mut tape = Tape::new();
        let x = scalar_param(&mut tape, &[-1.5, 0.25, 2.0]);
        assert_eq!(tape.relu_margin(), None);
        tape.relu(x);
        assert_eq!(tape.relu_margin(), Some(0.25));
    }

    #[test]
    fn row_distance_of_unit_vector() {
        let mut tape = Tape::new();
        let x = scalar_param(&mut tape, &[1.0, 0.0]);
        let d = tape.row_squared_distance(x, &[0.0, 0.0]).unwrap();
        assert_eq!(tape.value(d).values(), &[1.0]);
    }

    #[test]
    fn gradient_of_squared_distance() {
        let mut tape = Tape::new();
        let x = scalar_param(&mut tape, &[3.0, 4.0]);
        let d = tape.row_squared_distance(x, &[0.0, 0.0]).unwrap();
        let loss = tape.sum(d);
        let grads = tape.backward(loss).unwrap();
        assert_eq!(grads.get(x).unwrap().values(), &[6.0, 8.0]);
    }

    #[test]
    fn gradient_of_softplus_sum_at_zero() {
        let mut tape = Tape::new();
        let x = scalar_param(&mut tape, &[0.0, 0.0, 0.0]);
        let s = tape.softplus(x);
        let loss = tape.sum(s);
        let grads = tape.backward(loss).unwrap();
        assert!(grads.get(x).unwrap().values().iter().all(|&g| g == 0.5));
    }

    #[test]
    fn backward_requires_scalar_and_single_use() {
        let mut tape = Tape::new();
        let x = scalar_param(&mut tape, &[1.0, 2.0]);
        assert!(matches!(tape.backward(x), Err(Error::Contract(_))));
        let loss = tape.sum(x);
        tape.backward(loss).unwrap();
        assert!(matches!(tape.backward(loss), Err(Error::Contract(_))));
        tape.reset();
        assert!(tape.is_empty());
    }

    #[test]
    fn constants_get_no_gradient() {
        let mut tape = Tape::new();
        let x = scalar_param(&mut tape, &[1.0]);
        let c = tape.constant(DenseMatrix::scalar(5.0));
        let y = tape.mul(x, c).unwrap();
        let loss = tape.sum(y);
        let grads = tape.backward(loss).unwrap();
        assert_eq!(grads.get(x).unwrap().values(), &[5.0]);
        assert!(grads.get(c).is_none());
    }

    #[test]
    fn sgd_pure_decay_and_pure_gradient() {
        let mut p = Parameter::new(DenseMatrix::scalar(1.0));
        sgd_step(&mut [&mut p], 1.0, 0.1);
        assert!((p.value.values()[0] - 0.9).abs() < 1e-15);

        let mut q = Parameter::new(DenseMatrix::scalar(0.0));
        q.grad = DenseMatrix::scalar(2.0);
        sgd_step(&mut [&mut q], 0.5, 0.0);
        assert_eq!(q.value.values(), &[-1.0]);
        assert_eq!(q.grad.values(), &[0.0]);
    }

    #[test]
    fn clipping_rescales_only_large_gradients() {
        let mut a = Parameter::new(DenseMatrix::zeros(1, 2));
        let mut b = Parameter::new(DenseMatrix::scalar(0.0));
        a.grad = DenseMatrix::row_vector(vec![3.0, 0.0]);
        b.grad = DenseMatrix::scalar(4.0);
        assert_eq!(clip_grad_norm(&mut [&mut a, &mut b], 10.0), 5.0);
        assert_eq!(b.grad.values(), &[4.0]);
        assert_eq!(clip_grad_norm(&mut [&mut a, &mut b], 1.0), 5.0);
        assert!((grad_norm(&[&mut a, &mut b]) - 1.0).abs() < 1e-15);
        assert!((a.grad.values()[0] - 0.6).abs() < 1e-15);
    }

    #[test]
    fn sgd_matches_scalar_oracle_on_quadratic() {
        // f(a, b) = (a - 1)^2 + 3 (b + 2)^2
        let (a0, b0, lr, mu) = (0.5, 0.25, 0.1, 0.01);
        let oracle_a = a0 - lr * (2.0 * (a0 - 1.0) + mu * a0);
        let oracle_b = b0 - lr * (6.0 * (b0 + 2.0) + mu * b0);

        let mut p = Parameter::new(DenseMatrix::row_vector(vec![a0, b0]));
        let mut tape = Tape::new();
        let x = tape.param(p.value.clone());
        let target = tape.constant(DenseMatrix::row_vector(vec![1.0, -2.0]));
        let weights = tape.constant(DenseMatrix::row_vector(vec![1.0, 3.0]));
        let diff = tape.sub(x, target).unwrap();
        let sq = tape.mul(diff, diff).unwrap();
        let weighted = tape.mul(sq, weights).unwrap();
        let loss = tape.sum(weighted);
        let grads = tape.backward(loss).unwrap();
        p.accumulate(&grads, x).unwrap();
        sgd_step(&mut [&mut p], lr, mu);
        assert!((p.value.values()[0] - oracle_a).abs() < 1e-14);
        assert!((p.value.values()[1] - oracle_b).abs() < 1e-14);
    }

    #[test]
    fn neighbor_and_segment_sums() {
        let mut tape = Tape::new();
        let x = tape.param(DenseMatrix::from_rows(&[vec![1.0], vec![10.0], vec![100.0]]).unwrap());
        let adj = Arc::new(vec![vec![1], vec![0], vec![]]);
        let agg = tape.neighbor_sum(x, adj, 1.0).unwrap();
        assert_eq!(tape.value(agg).values(), &[11.0, 11.0, 100.0]);
        let seg = tape.segment_sum(agg, Arc::new(vec![0, 0, 1]), 2).unwrap();
        assert_eq!(tape.value(seg).values(), &[22.0, 100.0]);
        let loss = tape.sum(seg);
        let grads = tape.backward(loss).unwrap();
        assert_eq!(grads.get(x).unwrap().values(), &[2.0, 2.0, 1.0]);
    }

    #[test]
    fn gradient_linearity_over_batch() {
        // gradient of a sum over samples equals the sum of per-sample gradients
        let w0 = DenseMatrix::from_rows(&[vec![0.3, -0.2], vec![0.5, 0.7]]).unwrap();
        let rows = [vec![1.0, 2.0], vec![-0.5, 0.25], vec![3.0, -1.0]];
        let grad_of = |batch: &[Vec<f64>]| {
            let mut tape = Tape::new();
            let x = tape.constant(DenseMatrix::from_rows(batch).unwrap());
            let w = tape.param(w0.clone());
            let y = tape.matmul(x, w).unwrap();
            let s = tape.softplus(y);
            let loss = tape.sum(s);
            tape.backward(loss).unwrap().get(w).unwrap().clone()
        };
        let full = grad_of(&rows);
        let mut parts = DenseMatrix::zeros(2, 2);
        for r in &rows {
            parts.axpy(1.0, &grad_of(std::slice::from_ref(r))).unwrap();
        }
        assert!(full.sub(&parts).unwrap().frobenius_norm() < 1e-10);
    }

    #[test]
    fn parameter_serializes_as_matrix() {
        let p = Parameter::new(DenseMatrix::row_vector(vec![1.5, -2.0]));
        let json = serde_json::to_string(&p).unwrap();
        let back: Parameter = serde_json::from_str(&json).unwrap();
        assert_eq!(back, p);
        assert_eq!(back.grad.shape(), (1, 2));
    }
}

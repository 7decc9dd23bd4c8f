//! GIN encoder with node-level and graph-level fully connected heads.
//!
//! Layer `l` computes `z_l = MLP_l((1 + ε_l)·z_{l-1} + Σ_{j ∈ N(i)} z_{l-1,j})`
//! where each `MLP_l` is linear → relu → linear. The node representation is
//! the column concatenation of all layer outputs and the graph readout is the
//! per-graph sum of those rows. Two independent 3-layer heads map the node
//! and graph representations to width `k`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::diffcore::{Gradients, Parameter, Tape, Var};
use crate::error::{Error, Result};
use crate::graphdata::GraphBatch;
use crate::linalg::DenseMatrix;
use crate::rng::{self, purpose};

/// Anything that owns trainable tensors, in a fixed order.
pub trait Trainable {
    fn parameters(&self) -> Vec<&Parameter>;
    fn parameters_mut(&mut self) -> Vec<&mut Parameter>;

    /// Register every parameter on `tape`, in [`Trainable::parameters`] order.
    fn bind_all(&self, tape: &mut Tape) -> Vec<Var> {
        self.parameters()
            .into_iter()
            .map(|p| tape.param(p.value.clone()))
            .collect()
    }

    /// Add gradients for vars produced by [`Trainable::bind_all`].
    fn accumulate(&mut self, vars: &[Var], grads: &Gradients) -> Result<()> {
        for (p, &v) in self.parameters_mut().into_iter().zip(vars) {
            p.accumulate(grads, v)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Linear {
    /// `in x out`
    pub weight: Parameter,
    /// `1 x out`
    pub bias: Parameter,
}

impl Linear {
    /// Glorot-uniform weights in `±sqrt(6 / (fan_in + fan_out))`, zero bias.
    pub fn init(fan_in: usize, fan_out: usize, rng: &mut impl Rng) -> Linear {
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let values = (0..fan_in * fan_out)
            .map(|_| rng.gen_range(-limit..=limit))
            .collect();
        Linear {
            weight: Parameter::new(DenseMatrix::new(fan_in, fan_out, values).expect("sized above")),
            bias: Parameter::new(DenseMatrix::zeros(1, fan_out)),
        }
    }

    pub fn zeros(fan_in: usize, fan_out: usize) -> Linear {
        Linear {
            weight: Parameter::new(DenseMatrix::zeros(fan_in, fan_out)),
            bias: Parameter::new(DenseMatrix::zeros(1, fan_out)),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.weight.value.rows()
    }

    pub fn output_dim(&self) -> usize {
        self.weight.value.cols()
    }
}

/// Linear layers with relu between them (none after the last).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<Linear>,
}

impl Mlp {
    pub fn init(widths: &[usize], rng: &mut impl Rng) -> Mlp {
        Mlp {
            layers: widths.windows(2).map(|w| Linear::init(w[0], w[1], rng)).collect(),
        }
    }

    pub fn zeros(widths: &[usize]) -> Mlp {
        Mlp {
            layers: widths.windows(2).map(|w| Linear::zeros(w[0], w[1])).collect(),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().map_or(0, Linear::input_dim)
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, Linear::output_dim)
    }

    /// Forward pass using vars bound in [`Trainable::parameters`] order
    /// (weight, bias per layer).
    pub fn forward(&self, tape: &mut Tape, vars: &[Var], x: Var) -> Result<Var> {
        if tape.value(x).cols() != self.input_dim() {
            return Err(Error::shape(
                "mlp",
                format!("input width {} for an MLP expecting {}", tape.value(x).cols(), self.input_dim()),
            ));
        }
        let mut h = x;
        for (i, pair) in vars.chunks(2).enumerate() {
            let xw = tape.matmul(h, pair[0])?;
            h = tape.add_row(xw, pair[1])?;
            if i + 1 < self.layers.len() {
                h = tape.relu(h);
            }
        }
        Ok(h)
    }
}

impl Trainable for Mlp {
    fn parameters(&self) -> Vec<&Parameter> {
        self.layers.iter().flat_map(|l| [&l.weight, &l.bias]).collect()
    }

    fn parameters_mut(&mut self) -> Vec<&mut Parameter> {
        self.layers
            .iter_mut()
            .flat_map(|l| [&mut l.weight, &mut l.bias])
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncoderShape {
    pub input_dim: usize,
    /// GIN depth `L`.
    pub layers: usize,
    /// Hidden and output width `k`.
    pub hidden: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncoderParams {
    pub shape: EncoderShape,
    pub gin_layers: Vec<Mlp>,
    /// GIN self weights, fixed (not trained).
    pub epsilons: Vec<f64>,
    pub node_head: Mlp,
    pub graph_head: Mlp,
}

/// Vars for one [`EncoderParams`] bound on a tape.
#[derive(Clone, Debug)]
pub struct BoundEncoder {
    pub vars: Vec<Var>,
    gin: Vec<std::ops::Range<usize>>,
    node_head: std::ops::Range<usize>,
    graph_head: std::ops::Range<usize>,
}

impl EncoderParams {
    pub fn init(shape: EncoderShape, seed: u64) -> EncoderParams {
        let mut rng = rng::stream(seed, purpose::INIT);
        let k = shape.hidden;
        let gin_layers = (0..shape.layers)
            .map(|l| {
                let fan_in = if l == 0 { shape.input_dim } else { k };
                Mlp::init(&[fan_in, k, k], &mut rng)
            })
            .collect();
        let concat = shape.layers * k;
        EncoderParams {
            shape,
            gin_layers,
            epsilons: vec![0.0; shape.layers],
            node_head: Mlp::init(&[concat, k, k, k], &mut rng),
            graph_head: Mlp::init(&[concat, k, k, k], &mut rng),
        }
    }

    pub fn zeros(shape: EncoderShape) -> EncoderParams {
        let k = shape.hidden;
        let concat = shape.layers * k;
        EncoderParams {
            shape,
            gin_layers: (0..shape.layers)
                .map(|l| Mlp::zeros(&[if l == 0 { shape.input_dim } else { k }, k, k]))
                .collect(),
            epsilons: vec![0.0; shape.layers],
            node_head: Mlp::zeros(&[concat, k, k, k]),
            graph_head: Mlp::zeros(&[concat, k, k, k]),
        }
    }

    pub fn concat_width(&self) -> usize {
        self.shape.layers * self.shape.hidden
    }

    pub fn bind(&self, tape: &mut Tape) -> BoundEncoder {
        let vars = self.bind_all(tape);
        let mut offset = 0;
        let mut take = |n: usize| {
            let r = offset..offset + n;
            offset += n;
            r
        };
        let gin = self
            .gin_layers
            .iter()
            .map(|m| take(2 * m.layers.len()))
            .collect();
        let node_head = take(2 * self.node_head.layers.len());
        let graph_head = take(2 * self.graph_head.layers.len());
        BoundEncoder {
            vars,
            gin,
            node_head,
            graph_head,
        }
    }

    /// Message passing: returns `(node_concat n x L·k, graph_readout |G| x L·k)`.
    pub fn gin_forward(&self, tape: &mut Tape, bound: &BoundEncoder, batch: &GraphBatch) -> Result<(Var, Var)> {
        if batch.node_features.cols() != self.shape.input_dim {
            return Err(Error::shape(
                "gin_forward",
                format!(
                    "feature width {} for an encoder expecting {}",
                    batch.node_features.cols(),
                    self.shape.input_dim
                ),
            ));
        }
        let mut z = tape.constant(batch.node_features.clone());
        let mut outputs = Vec::with_capacity(self.gin_layers.len());
        for ((mlp, range), &eps) in self.gin_layers.iter().zip(&bound.gin).zip(&self.epsilons) {
            let aggregated = tape.neighbor_sum(z, batch.adjacency.clone(), 1.0 + eps)?;
            z = mlp.forward(tape, &bound.vars[range.clone()], aggregated)?;
            outputs.push(z);
        }
        let node_concat = tape.concat_columns(&outputs)?;
        let readout = tape.segment_sum(node_concat, batch.graph_indicator.clone(), batch.graph_count)?;
        Ok((node_concat, readout))
    }

    /// Node head `h` (n x k) and graph head `H` (|G| x k).
    pub fn heads(&self, tape: &mut Tape, bound: &BoundEncoder, node_concat: Var, graph_readout: Var) -> Result<(Var, Var)> {
        let h = self
            .node_head
            .forward(tape, &bound.vars[bound.node_head.clone()], node_concat)?;
        let big_h = self
            .graph_head
            .forward(tape, &bound.vars[bound.graph_head.clone()], graph_readout)?;
        Ok((h, big_h))
    }

    /// Full forward pass `(h, H)` for one batch.
    pub fn forward(&self, tape: &mut Tape, bound: &BoundEncoder, batch: &GraphBatch) -> Result<(Var, Var)> {
        let (nodes, readout) = self.gin_forward(tape, bound, batch)?;
        self.heads(tape, bound, nodes, readout)
    }

    /// Graph-level representations `H` without keeping a tape around.
    pub fn embed_graphs(&self, batch: &GraphBatch) -> Result<DenseMatrix> {
        let mut tape = Tape::new();
        let bound = self.bind(&mut tape);
        let (_, big_h) = self.forward(&mut tape, &bound, batch)?;
        Ok(tape.value(big_h).clone())
    }
}

impl Trainable for EncoderParams {
    fn parameters(&self) -> Vec<&Parameter> {
        self.gin_layers
            .iter()
            .flat_map(Mlp::parameters)
            .chain(self.node_head.parameters())
            .chain(self.graph_head.parameters())
            .collect()
    }

    fn parameters_mut(&mut self) -> Vec<&mut Parameter> {
        let EncoderParams {
            gin_layers,
            node_head,
            graph_head,
            ..
        } = self;
        gin_layers
            .iter_mut()
            .flat_map(Mlp::parameters_mut)
            .chain(node_head.parameters_mut())
            .chain(graph_head.parameters_mut())
            .collect()
    }
}

/// Feed-forward encoder for tabular rows: input → k → k → k.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TabularEncoder {
    pub mlp: Mlp,
}

impl TabularEncoder {
    pub fn init(input_dim: usize, hidden: usize, seed: u64) -> TabularEncoder {
        let mut rng = rng::stream(seed, purpose::INIT);
        TabularEncoder {
            mlp: Mlp::init(&[input_dim, hidden, hidden, hidden], &mut rng),
        }
    }

    pub fn zeros(input_dim: usize, hidden: usize) -> TabularEncoder {
        TabularEncoder {
            mlp: Mlp::zeros(&[input_dim, hidden, hidden, hidden]),
        }
    }

    pub fn embed(&self, rows: &DenseMatrix) -> Result<DenseMatrix> {
        let mut tape = Tape::new();
        let vars = self.bind_all(&mut tape);
        let x = tape.constant(rows.clone());
        let out = self.mlp.forward(&mut tape, &vars, x)?;
        Ok(tape.value(out).clone())
    }
}

impl Trainable for TabularEncoder {
    fn parameters(&self) -> Vec<&Parameter> {
        self.mlp.parameters()
    }

    fn parameters_mut(&mut self) -> Vec<&mut Parameter> {
        self.mlp.parameters_mut()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphdata::{fixture_dataset, Graph, GraphBatch};

    fn default_shape(input_dim: usize) -> EncoderShape {
        EncoderShape {
            input_dim,
            layers: 4,
            hidden: 16,
        }
    }

    fn single_graph(node_count: usize, edges: Vec<(usize, usize)>, features: DenseMatrix) -> Graph {
        Graph {
            node_count,
            edges,
            node_features: features,
            label: 0,
            node_labels: None,
        }
    }

    #[test]
    fn isolated_node_with_zero_weights_is_zero() {
        let g = single_graph(1, vec![], DenseMatrix::row_vector(vec![1.0, 2.0]));
        let batch = GraphBatch::assemble(&[g], &[0]).unwrap();
        let params = EncoderParams::zeros(default_shape(2));
        let mut tape = Tape::new();
        let bound = params.bind(&mut tape);
        let (nodes, readout) = params.gin_forward(&mut tape, &bound, &batch).unwrap();
        assert!(tape.value(nodes).values().iter().all(|&v| v == 0.0));
        assert!(tape.value(readout).values().iter().all(|&v| v == 0.0));
        let (h, big_h) = params.heads(&mut tape, &bound, nodes, readout).unwrap();
        assert!(tape.value(h).values().iter().all(|&v| v == 0.0));
        assert_eq!(tape.value(h).cols(), tape.value(big_h).cols());
    }

    #[test]
    fn path_aggregation_with_identity_mlp() {
        // identity weights in both linear layers; features are nonnegative so
        // the inner relu is the identity too
        let x = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 5.0]]).unwrap();
        let g = single_graph(2, vec![(0, 1)], x);
        let batch = GraphBatch::assemble(&[g], &[0]).unwrap();
        let shape = EncoderShape {
            input_dim: 2,
            layers: 1,
            hidden: 2,
        };
        let mut params = EncoderParams::zeros(shape);
        for lin in &mut params.gin_layers[0].layers {
            lin.weight.value = DenseMatrix::identity(2);
        }
        let mut tape = Tape::new();
        let bound = params.bind(&mut tape);
        let (nodes, _) = params.gin_forward(&mut tape, &bound, &batch).unwrap();
        assert_eq!(tape.value(nodes).values(), &[4.0, 7.0, 4.0, 7.0]);
    }

    #[test]
    fn default_widths() {
        let ds = fixture_dataset();
        let batch = GraphBatch::assemble(&ds.graphs, &[0, 1, 2]).unwrap();
        let params = EncoderParams::init(default_shape(ds.feature_dim), 0);
        let mut tape = Tape::new();
        let bound = params.bind(&mut tape);
        let (nodes, readout) = params.gin_forward(&mut tape, &bound, &batch).unwrap();
        assert_eq!(tape.value(nodes).shape(), (batch.node_count(), 64));
        assert_eq!(tape.value(readout).shape(), (3, 64));
        let (h, big_h) = params.heads(&mut tape, &bound, nodes, readout).unwrap();
        assert_eq!(tape.value(h).cols(), 16);
        assert_eq!(tape.value(big_h).shape(), (3, 16));
    }

    #[test]
    fn feature_width_mismatch() {
        let ds = fixture_dataset();
        let batch = GraphBatch::assemble(&ds.graphs, &[0]).unwrap();
        let params = EncoderParams::init(default_shape(ds.feature_dim + 1), 0);
        let mut tape = Tape::new();
        let bound = params.bind(&mut tape);
        assert!(matches!(
            params.gin_forward(&mut tape, &bound, &batch),
            Err(Error::Shape { .. })
        ));
    }

    #[test]
    fn batch_consistency_and_permutation_invariance() {
        let ds = fixture_dataset();
        let params = EncoderParams::init(default_shape(ds.feature_dim), 5);
        let together = params
            .embed_graphs(&GraphBatch::assemble(&ds.graphs, &[3, 7, 11]).unwrap())
            .unwrap();
        let alone = params
            .embed_graphs(&GraphBatch::assemble(&ds.graphs, &[7]).unwrap())
            .unwrap();
        for (a, b) in together.row(1).iter().zip(alone.row(0)) {
            assert!((a - b).abs() <= 1e-10);
        }

        // reverse the node order of graph 7
        let g = &ds.graphs[7];
        let n = g.node_count;
        let perm = |i: usize| n - 1 - i;
        let permuted = Graph {
            node_count: n,
            edges: g.edges.iter().map(|&(a, b)| (perm(a).min(perm(b)), perm(a).max(perm(b)))).collect(),
            node_features: g.node_features.select_rows(&(0..n).rev().collect::<Vec<_>>()).unwrap(),
            label: g.label,
            node_labels: None,
        };
        let p = params
            .embed_graphs(&GraphBatch::assemble(&[permuted], &[0]).unwrap())
            .unwrap();
        for (a, b) in p.row(0).iter().zip(alone.row(0)) {
            assert!((a - b).abs() <= 1e-10);
        }
    }

    #[test]
    fn parameters_round_trip_through_json() {
        let params = EncoderParams::init(default_shape(3), 1);
        let json = serde_json::to_string(&params).unwrap();
        let back: EncoderParams = serde_json::from_str(&json).unwrap();
        assert_eq!(back, params);
    }
}

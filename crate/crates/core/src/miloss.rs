//! Jensen–Shannon mutual-information estimate between node and graph
//! representations of one batch.
//!
//! With scores `s_uj = h_u · H_j` and softplus `σ`, positives are the pairs
//! where node `u` belongs to graph `j`:
//!
//! ```text
//! I = mean_j ( 1/|G_j| Σ_{u ∈ G_j} −σ(−s_uj) )  −  mean_{u ∉ G_j} σ(s_uj)
//! ```

use crate::diffcore::{Tape, Var};
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

/// Positive/negative pair layout for one batch.
#[derive(Clone, Debug)]
pub struct MiPairing {
    /// `n x |G|`, 1 where node `u` belongs to graph `j`.
    pub positive_mask: DenseMatrix,
    pub node_counts: Vec<usize>,
}

impl MiPairing {
    pub fn new(indicator: &[usize], graph_count: usize) -> Result<MiPairing> {
        let mut mask = DenseMatrix::zeros(indicator.len(), graph_count);
        let mut node_counts = vec![0; graph_count];
        for (u, &g) in indicator.iter().enumerate() {
            if g >= graph_count {
                return Err(Error::shape(
                    "mi pairing",
                    format!("node {u} assigned to graph {g} of {graph_count}"),
                ));
            }
            mask.set(u, g, 1.0);
            node_counts[g] += 1;
        }
        Ok(MiPairing {
            positive_mask: mask,
            node_counts,
        })
    }

    pub fn negative_count(&self) -> usize {
        let (n, g) = self.positive_mask.shape();
        n * g - n
    }

    /// Weights for the positive term: `1 / (|G_j| · #graphs)` on positives.
    fn positive_weights(&self) -> DenseMatrix {
        let populated = self.node_counts.iter().filter(|&&c| c > 0).count() as f64;
        let mut w = self.positive_mask.clone();
        for u in 0..w.rows() {
            for (j, x) in w.row_mut(u).iter_mut().enumerate() {
                if *x != 0.0 {
                    *x = 1.0 / (self.node_counts[j] as f64 * populated);
                }
            }
        }
        w
    }

    fn negative_weights(&self) -> DenseMatrix {
        let per = 1.0 / self.negative_count() as f64;
        self.positive_mask.map(|m| if m == 0.0 { per } else { 0.0 })
    }
}

#[derive(Clone, Debug)]
pub struct MiEstimate {
    /// Scalar estimate `I` (to be maximised).
    pub value: Var,
    pub scores: Var,
    /// Set when the batch had a single graph and no negative pairs.
    pub warning: Option<String>,
}

/// Record the JSD estimate for node representations `h` (n x k), graph
/// representations `big_h` (|G| x k) and the per-node graph `indicator`.
pub fn jsd_mi(tape: &mut Tape, h: Var, big_h: Var, indicator: &[usize]) -> Result<MiEstimate> {
    let (n, k) = tape.value(h).shape();
    let (graphs, k2) = tape.value(big_h).shape();
    if k != k2 {
        return Err(Error::shape(
            "jsd_mi",
            format!("node width {k} vs graph width {k2}"),
        ));
    }
    if indicator.len() != n {
        return Err(Error::shape(
            "jsd_mi",
            format!("{} indicator entries for {n} nodes", indicator.len()),
        ));
    }
    let pairing = MiPairing::new(indicator, graphs)?;

    let big_h_t = tape.transpose(big_h);
    let scores = tape.matmul(h, big_h_t)?;
    let flipped = tape.scale(scores, -1.0);
    let soft_flipped = tape.softplus(flipped);
    // Σ w⁺ σ(−s), i.e. minus the positive expectation
    let positive = tape.weighted_sum(soft_flipped, pairing.positive_weights())?;

    let (value, warning) = if pairing.negative_count() == 0 {
        let w = "batch has a single graph: no negative pairs, using the positive term only".to_string();
        log::warn!("{w}");
        (tape.scale(positive, -1.0), Some(w))
    } else {
        let soft = tape.softplus(scores);
        let negative = tape.weighted_sum(soft, pairing.negative_weights())?;
        let both = tape.add(positive, negative)?;
        (tape.scale(both, -1.0), None)
    };
    Ok(MiEstimate {
        value,
        scores,
        warning,
    })
}

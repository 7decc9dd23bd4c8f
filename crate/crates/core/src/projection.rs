//! Orthogonal projection layer.
//!
//! Fitted from a batch `H` (n x k): with the centred batch `H − mean = U Λ Vᵀ`,
//! the projection is `W = V_{k'} Λ_{k'}^{-1}` so that the projected fitting
//! batch `(H − mean) W = U_{k'}` has orthonormal columns. Equivalently, the
//! output is the first `k'` principal components scaled to unit norm.
//!
//! `W` and `mean` are constants to the autodiff tape: they are refitted by SVD
//! instead of trained.

use serde::{Deserialize, Serialize};

use crate::diffcore::{Tape, Var};
use crate::error::{Error, Result};
use crate::linalg::{matmul, matmul_transpose_a, svd, DenseMatrix};

/// Relative floor on retained singular values.
pub const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectionState {
    /// `k x k'`
    pub weights: DenseMatrix,
    pub mean: Vec<f64>,
    pub retained_sigma: Vec<f64>,
    pub k_prime: usize,
}

impl ProjectionState {
    pub fn input_dim(&self) -> usize {
        self.weights.rows()
    }
}

pub fn fit_projection(batch: &DenseMatrix, k_prime: usize) -> Result<ProjectionState> {
    let (n, k) = batch.shape();
    if k_prime == 0 || k_prime > k {
        return Err(Error::Contract(format!(
            "projected width {k_prime} must be in 1..={k}"
        )));
    }
    if n < k_prime {
        return Err(Error::Contract(format!(
            "need at least {k_prime} rows to fit the projection, got {n}"
        )));
    }
    if !batch.is_finite() {
        return Err(Error::Numeric("projection batch has non-finite entries".into()));
    }
    let mean = batch.column_means();
    let centred = batch.sub_row_vector(&mean)?;
    let factors = svd(&centred)?;
    let largest = factors.sigma[0];
    if let Some(i) = (0..k_prime).find(|&i| largest == 0.0 || factors.sigma[i] < RANK_TOLERANCE * largest) {
        return Err(Error::RankDeficient {
            index: i + 1,
            value: factors.sigma[i],
            largest,
        });
    }
    let retained_sigma = factors.sigma[..k_prime].to_vec();
    let mut weights = factors.v.take_columns(k_prime)?;
    for r in 0..weights.rows() {
        for (w, s) in weights.row_mut(r).iter_mut().zip(&retained_sigma) {
            *w /= s;
        }
    }
    Ok(ProjectionState {
        weights,
        mean,
        retained_sigma,
        k_prime,
    })
}

/// `(H − mean) W` on plain matrices.
pub fn apply_projection(h: &DenseMatrix, state: &ProjectionState) -> Result<DenseMatrix> {
    if h.cols() != state.input_dim() {
        return Err(Error::shape(
            "apply_projection",
            format!("width {} for a projection from {}", h.cols(), state.input_dim()),
        ));
    }
    matmul(&h.sub_row_vector(&state.mean)?, &state.weights)
}

/// `(H − mean) W` recorded on a tape; gradients reach `h` only.
pub fn apply_projection_var(tape: &mut Tape, h: Var, state: &ProjectionState) -> Result<Var> {
    if tape.value(h).cols() != state.input_dim() {
        return Err(Error::shape(
            "apply_projection",
            format!("width {} for a projection from {}", tape.value(h).cols(), state.input_dim()),
        ));
    }
    let neg_mean = tape.constant(DenseMatrix::row_vector(state.mean.iter().map(|m| -m).collect()));
    let centred = tape.add_row(h, neg_mean)?;
    let w = tape.constant(state.weights.clone());
    tape.matmul(centred, w)
}

/// `‖H̃ᵀH̃ − I‖_F`.
pub fn orthonormality_error(projected: &DenseMatrix) -> f64 {
    let gram = matmul_transpose_a(projected, projected).expect("square by construction");
    gram.sub(&DenseMatrix::identity(projected.cols()))
        .expect("same shape")
        .frobenius_norm()
}

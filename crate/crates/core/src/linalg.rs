//! Dense row-major matrices and a one-sided Jacobi SVD.
//!
//! Everything here is sized for desk-scale work (a few hundred rows, at most
//! a hundred or so columns), so the kernels are plain loops with a cache
//! friendly `i-k-j` ordering rather than anything blocked or vectorised.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const JACOBI_MAX_SWEEPS: usize = 100;
const JACOBI_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::shape(
                "DenseMatrix::new",
                format!("{} values for a {rows}x{cols} matrix", values.len()),
            ));
        }
        Ok(Self { rows, cols, values })
    }

    /// Like [`DenseMatrix::new`] but also rejects NaN and infinite entries.
    pub fn new_finite(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!(
                "non-finite entry at ({}, {})",
                pos / cols.max(1),
                pos % cols.max(1)
            )));
        }
        Self::new(rows, cols, values)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            values: vec![0.0; rows * cols],
        }
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Self {
            rows,
            cols,
            values: vec![value; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.values[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != cols) {
            return Err(Error::shape(
                "DenseMatrix::from_rows",
                format!("row {bad} has {} entries, expected {cols}", rows[bad].len()),
            ));
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            values: rows.concat(),
        })
    }

    pub fn row_vector(values: Vec<f64>) -> Self {
        Self {
            rows: 1,
            cols: values.len(),
            values,
        }
    }

    pub fn column_vector(values: Vec<f64>) -> Self {
        Self {
            rows: values.len(),
            cols: 1,
            values,
        }
    }

    pub fn scalar(value: f64) -> Self {
        Self::row_vector(vec![value])
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.values[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, value: f64) {
        self.values[r * self.cols + c] = value;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.values[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.values[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    /// The single entry of a 1x1 matrix.
    pub fn item(&self) -> Result<f64> {
        if self.shape() != (1, 1) {
            return Err(Error::shape(
                "item",
                format!("expected 1x1, got {}x{}", self.rows, self.cols),
            ));
        }
        Ok(self.values[0])
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.values[c * self.rows + r] = self.values[r * self.cols + c];
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scale(&self, factor: f64) -> Self {
        self.map(|v| v * factor)
    }

    fn zip_with(&self, other: &Self, op: &'static str, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.shape() != other.shape() {
            return Err(Error::shape(
                op,
                format!(
                    "{}x{} vs {}x{}",
                    self.rows, self.cols, other.rows, other.cols
                ),
            ));
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, "add", |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, "sub", |a, b| a - b)
    }

    pub fn hadamard(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, "hadamard", |a, b| a * b)
    }

    /// `self += factor * other`, shapes must agree.
    pub fn axpy(&mut self, factor: f64, other: &Self) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::shape(
                "axpy",
                format!(
                    "{}x{} vs {}x{}",
                    self.rows, self.cols, other.rows, other.cols
                ),
            ));
        }
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += factor * b;
        }
        Ok(())
    }

    pub fn column_means(&self) -> Vec<f64> {
        let mut means = vec![0.0; self.cols];
        for r in 0..self.rows {
            for (m, v) in means.iter_mut().zip(self.row(r)) {
                *m += v;
            }
        }
        let n = self.rows.max(1) as f64;
        means.iter_mut().for_each(|m| *m /= n);
        means
    }

    /// Subtract `vector` from every row.
    pub fn sub_row_vector(&self, vector: &[f64]) -> Result<Self> {
        if vector.len() != self.cols {
            return Err(Error::shape(
                "sub_row_vector",
                format!("vector of length {} for {} columns", vector.len(), self.cols),
            ));
        }
        let mut out = self.clone();
        for r in 0..self.rows {
            for (v, m) in out.row_mut(r).iter_mut().zip(vector) {
                *v -= m;
            }
        }
        Ok(out)
    }

    pub fn select_rows(&self, indices: &[usize]) -> Result<Self> {
        let mut values = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            if i >= self.rows {
                return Err(Error::shape(
                    "select_rows",
                    format!("row {i} out of range for {} rows", self.rows),
                ));
            }
            values.extend_from_slice(self.row(i));
        }
        Ok(Self {
            rows: indices.len(),
            cols: self.cols,
            values,
        })
    }

    /// Leading `count` columns.
    pub fn take_columns(&self, count: usize) -> Result<Self> {
        if count > self.cols {
            return Err(Error::shape(
                "take_columns",
                format!("{count} of {} columns", self.cols),
            ));
        }
        let mut values = Vec::with_capacity(self.rows * count);
        for r in 0..self.rows {
            values.extend_from_slice(&self.row(r)[..count]);
        }
        Ok(Self {
            rows: self.rows,
            cols: count,
            values,
        })
    }

    pub fn hcat(parts: &[&DenseMatrix]) -> Result<Self> {
        let rows = parts.first().map_or(0, |p| p.rows);
        if let Some(bad) = parts.iter().find(|p| p.rows != rows) {
            return Err(Error::shape(
                "hcat",
                format!("{} rows vs {rows}", bad.rows),
            ));
        }
        let cols = parts.iter().map(|p| p.cols).sum();
        let mut values = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for p in parts {
                values.extend_from_slice(p.row(r));
            }
        }
        Ok(Self { rows, cols, values })
    }

    pub fn vcat(parts: &[&DenseMatrix]) -> Result<Self> {
        let cols = parts.first().map_or(0, |p| p.cols);
        if let Some(bad) = parts.iter().find(|p| p.cols != cols) {
            return Err(Error::shape(
                "vcat",
                format!("{} columns vs {cols}", bad.cols),
            ));
        }
        let rows = parts.iter().map(|p| p.rows).sum();
        let mut values = Vec::with_capacity(rows * cols);
        for p in parts {
            values.extend_from_slice(&p.values);
        }
        Ok(Self { rows, cols, values })
    }
}

/// `a * b`.
pub fn matmul(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    if a.cols != b.rows {
        return Err(Error::shape(
            "matmul",
            format!("{}x{} times {}x{}", a.rows, a.cols, b.rows, b.cols),
        ));
    }
    let mut out = DenseMatrix::zeros(a.rows, b.cols);
    for i in 0..a.rows {
        let out_row = &mut out.values[i * b.cols..(i + 1) * b.cols];
        for (k, &aik) in a.row(i).iter().enumerate() {
            if aik == 0.0 {
                continue;
            }
            for (o, &bkj) in out_row.iter_mut().zip(b.row(k)) {
                *o += aik * bkj;
            }
        }
    }
    Ok(out)
}

/// `aᵀ * b` without materialising the transpose.
pub fn matmul_transpose_a(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    if a.rows != b.rows {
        return Err(Error::shape(
            "matmul_transpose_a",
            format!("({}x{})ᵀ times {}x{}", a.rows, a.cols, b.rows, b.cols),
        ));
    }
    let mut out = DenseMatrix::zeros(a.cols, b.cols);
    for k in 0..a.rows {
        let b_row = b.row(k);
        for (i, &aki) in a.row(k).iter().enumerate() {
            if aki == 0.0 {
                continue;
            }
            let out_row = &mut out.values[i * b.cols..(i + 1) * b.cols];
            for (o, &bkj) in out_row.iter_mut().zip(b_row) {
                *o += aki * bkj;
            }
        }
    }
    Ok(out)
}

/// `a * bᵀ` without materialising the transpose.
pub fn matmul_transpose_b(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    if a.cols != b.cols {
        return Err(Error::shape(
            "matmul_transpose_b",
            format!("{}x{} times ({}x{})ᵀ", a.rows, a.cols, b.rows, b.cols),
        ));
    }
    let mut out = DenseMatrix::zeros(a.rows, b.rows);
    for i in 0..a.rows {
        let a_row = a.row(i);
        for j in 0..b.rows {
            out.values[i * b.rows + j] = dot(a_row, b.row(j));
        }
    }
    Ok(out)
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Thin SVD `M = U diag(sigma) Vᵀ` with `r = min(rows, cols)` factors.
#[derive(Clone, Debug)]
pub struct SvdFactors {
    pub u: DenseMatrix,
    pub sigma: Vec<f64>,
    pub v: DenseMatrix,
    /// Number of singular values above `max(rows, cols) * eps * sigma[0]`.
    pub rank: usize,
}

impl SvdFactors {
    pub fn reconstruct(&self) -> DenseMatrix {
        let mut us = self.u.clone();
        for r in 0..us.rows {
            for (v, s) in us.row_mut(r).iter_mut().zip(&self.sigma) {
                *v *= s;
            }
        }
        matmul_transpose_b(&us, &self.v).expect("factor shapes are consistent")
    }
}

/// Thin singular value decomposition by one-sided Jacobi rotations.
///
/// Rotations act on the columns of whichever of `m` / `mᵀ` is tall, so the
/// work is on the smaller dimension. Singular values come back sorted in
/// descending order, and each singular pair is signed so that the
/// largest-magnitude entry of its right singular vector is nonnegative.
pub fn svd(m: &DenseMatrix) -> Result<SvdFactors> {
    if m.rows.min(m.cols) == 0 {
        return Err(Error::Contract(format!(
            "svd of an empty {}x{} matrix",
            m.rows, m.cols
        )));
    }
    if !m.is_finite() {
        return Err(Error::Numeric("svd input has non-finite entries".into()));
    }
    let (u, sigma, v) = if m.rows >= m.cols {
        jacobi_tall(m)?
    } else {
        let (u, sigma, v) = jacobi_tall(&m.transpose())?;
        (v, sigma, u)
    };

    let rank_floor = m.rows.max(m.cols) as f64 * f64::EPSILON * sigma.first().copied().unwrap_or(0.0);
    let rank = sigma.iter().filter(|&&s| s > rank_floor).count();
    Ok(SvdFactors { u, sigma, v, rank })
}

/// Jacobi on a tall matrix (`rows >= cols`). Returns `(U, sigma, V)` sorted
/// and sign-normalised.
fn jacobi_tall(m: &DenseMatrix) -> Result<(DenseMatrix, Vec<f64>, DenseMatrix)> {
    let (rows, n) = m.shape();
    let mut cols: Vec<Vec<f64>> = (0..n).map(|c| m.column(c)).collect();
    let mut vcols: Vec<Vec<f64>> = (0..n)
        .map(|c| {
            let mut e = vec![0.0; n];
            e[c] = 1.0;
            e
        })
        .collect();

    let mut converged = false;
    let mut worst = 0.0_f64;
    for _sweep in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        worst = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha = dot(&cols[p], &cols[p]);
                let beta = dot(&cols[q], &cols[q]);
                let gamma = dot(&cols[p], &cols[q]);
                let scale = (alpha * beta).sqrt();
                if scale == 0.0 || gamma.abs() <= JACOBI_TOLERANCE * scale {
                    continue;
                }
                worst = worst.max(gamma.abs() / scale);
                rotated = true;

                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut cols, p, q, c, s);
                rotate(&mut vcols, p, q, c, s);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Numeric(format!(
            "jacobi svd did not converge in {JACOBI_MAX_SWEEPS} sweeps; worst relative off-diagonal {worst:e}"
        )));
    }

    let norms: Vec<f64> = cols.iter().map(|c| dot(c, c).sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]));

    let sigma: Vec<f64> = order.iter().map(|&i| norms[i]).collect();
    let mut ucols: Vec<Option<Vec<f64>>> = order
        .iter()
        .map(|&i| {
            let s = norms[i];
            (s > 0.0).then(|| cols[i].iter().map(|x| x / s).collect())
        })
        .collect();
    let mut vsorted: Vec<Vec<f64>> = order.iter().map(|&i| vcols[i].clone()).collect();
    complete_basis(&mut ucols, rows);
    let mut ucols: Vec<Vec<f64>> = ucols.into_iter().map(|c| c.expect("completed")).collect();

    for (ucol, vcol) in ucols.iter_mut().zip(vsorted.iter_mut()) {
        let mut lead = 0;
        for (i, x) in vcol.iter().enumerate() {
            if x.abs() > vcol[lead].abs() {
                lead = i;
            }
        }
        if vcol[lead] < 0.0 {
            vcol.iter_mut().for_each(|x| *x = -*x);
            ucol.iter_mut().for_each(|x| *x = -*x);
        }
    }

    Ok((from_columns(&ucols, rows), sigma, from_columns(&vsorted, n)))
}

fn rotate(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (left, right) = cols.split_at_mut(q);
    let (cp, cq) = (&mut left[p], &mut right[0]);
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let (a, b) = (*x, *y);
        *x = c * a - s * b;
        *y = s * a + c * b;
    }
}

/// Fill `None` columns with unit vectors orthogonal to every other column.
fn complete_basis(cols: &mut [Option<Vec<f64>>], dim: usize) {
    for j in 0..cols.len() {
        if cols[j].is_some() {
            continue;
        }
        let mut best: Option<(f64, Vec<f64>)> = None;
        for e in 0..dim {
            let mut cand = vec![0.0; dim];
            cand[e] = 1.0;
            // two Gram-Schmidt passes
            for _ in 0..2 {
                for other in cols.iter().flatten() {
                    let proj = dot(&cand, other);
                    for (c, o) in cand.iter_mut().zip(other) {
                        *c -= proj * o;
                    }
                }
            }
            let norm = dot(&cand, &cand).sqrt();
            if best.as_ref().is_none_or(|(b, _)| norm > *b) {
                best = Some((norm, cand));
            }
        }
        let (norm, cand) = best.expect("dim >= cols");
        cols[j] = Some(cand.into_iter().map(|x| x / norm).collect());
    }
}

fn from_columns(cols: &[Vec<f64>], rows: usize) -> DenseMatrix {
    let mut out = DenseMatrix::zeros(rows, cols.len());
    for (c, col) in cols.iter().enumerate() {
        for (r, &x) in col.iter().enumerate() {
            out.set(r, c, x);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, rng: &mut impl Rng) -> DenseMatrix {
        DenseMatrix::new(rows, cols, (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .unwrap()
    }

    fn naive(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(a.rows(), b.cols());
        for i in 0..a.rows() {
            for j in 0..b.cols() {
                let mut acc = 0.0;
                for k in 0..a.cols() {
                    acc += a.get(i, k) * b.get(k, j);
                }
                out.set(i, j, acc);
            }
        }
        out
    }

    fn orthonormality_error(m: &DenseMatrix) -> f64 {
        matmul_transpose_a(m, m)
            .unwrap()
            .sub(&DenseMatrix::identity(m.cols()))
            .unwrap()
            .frobenius_norm()
    }

    #[test]
    fn identity_times_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = random(3, 5, &mut rng);
        assert_eq!(matmul(&DenseMatrix::identity(3), &m).unwrap(), m);
    }

    #[test]
    fn small_product_by_hand() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let b = DenseMatrix::column_vector(vec![0.0, 1.0]);
        let p = matmul(&a, &b).unwrap();
        assert_eq!(p.values(), &[2.0, 4.0]);
    }

    #[test]
    fn matmul_matches_triple_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = random(5, 7, &mut rng);
        let b = random(7, 3, &mut rng);
        let fast = matmul(&a, &b).unwrap();
        let slow = naive(&a, &b);
        for (x, y) in fast.values().iter().zip(slow.values()) {
            assert!((x - y).abs() <= 1e-12);
        }
        let ta = matmul_transpose_a(&a.transpose(), &b).unwrap();
        let tb = matmul_transpose_b(&a, &b.transpose()).unwrap();
        assert!(ta.sub(&slow).unwrap().frobenius_norm() < 1e-12);
        assert!(tb.sub(&slow).unwrap().frobenius_norm() < 1e-12);
    }

    #[test]
    fn matmul_rejects_bad_shapes() {
        let a = DenseMatrix::zeros(2, 3);
        let b = DenseMatrix::zeros(2, 3);
        assert!(matches!(matmul(&a, &b), Err(Error::Shape { .. })));
    }

    #[test]
    fn svd_of_identity() {
        let f = svd(&DenseMatrix::identity(3)).unwrap();
        assert_eq!(f.sigma, vec![1.0, 1.0, 1.0]);
        assert_eq!(f.rank, 3);
    }

    #[test]
    fn svd_of_diagonal() {
        let m = DenseMatrix::from_rows(&[vec![3.0, 0.0], vec![0.0, 2.0]]).unwrap();
        let f = svd(&m).unwrap();
        assert_eq!(f.sigma, vec![3.0, 2.0]);
        assert_eq!(f.u, DenseMatrix::identity(2));
        assert_eq!(f.v, DenseMatrix::identity(2));
    }

    #[test]
    fn svd_reconstructs_random_tall_and_wide() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for &(r, c) in &[(8, 4), (4, 8), (1, 5), (5, 1), (33, 17)] {
            let m = random(r, c, &mut rng);
            let f = svd(&m).unwrap();
            let rel = f.reconstruct().sub(&m).unwrap().frobenius_norm() / m.frobenius_norm();
            assert!(rel <= 1e-10, "{r}x{c}: {rel}");
            let k = r.min(c) as f64;
            assert!(orthonormality_error(&f.u) <= 1e-8 * k);
            assert!(orthonormality_error(&f.v) <= 1e-8 * k);
            assert!(f.sigma.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn svd_rank_deficient_still_orthonormal() {
        // two identical columns and a zero column
        let m = DenseMatrix::from_rows(&[
            vec![1.0, 1.0, 0.0],
            vec![2.0, 2.0, 0.0],
            vec![0.5, 0.5, 0.0],
            vec![1.0, 1.0, 0.0],
        ])
        .unwrap();
        let f = svd(&m).unwrap();
        assert_eq!(f.rank, 1);
        assert!(orthonormality_error(&f.u) <= 1e-8 * 3.0);
        assert!(orthonormality_error(&f.v) <= 1e-8 * 3.0);
        let rel = f.reconstruct().sub(&m).unwrap().frobenius_norm() / m.frobenius_norm();
        assert!(rel <= 1e-10);
    }

    #[test]
    fn svd_sign_convention() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m = random(10, 4, &mut rng);
        let f = svd(&m).unwrap();
        for c in 0..f.v.cols() {
            let col = f.v.column(c);
            let lead = col
                .iter()
                .copied()
                .fold(0.0_f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
            assert!(lead >= 0.0);
        }
        let g = svd(&m.scale(1.0)).unwrap();
        assert_eq!(f.v, g.v);
    }

    #[test]
    fn svd_rejects_empty_and_nan() {
        assert!(svd(&DenseMatrix::zeros(0, 3)).is_err());
        let bad = DenseMatrix::new(1, 2, vec![1.0, f64::NAN]).unwrap();
        assert!(matches!(svd(&bad), Err(Error::Numeric(_))));
    }

    #[test]
    fn new_finite_rejects_nan() {
        assert!(DenseMatrix::new_finite(1, 2, vec![0.0, f64::INFINITY]).is_err());
        assert!(DenseMatrix::new(2, 2, vec![0.0; 3]).is_err());
    }
}

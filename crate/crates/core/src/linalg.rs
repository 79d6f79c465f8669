//! Small dense linear-algebra helpers shared by the spectral and Nystrom code.

use faer::linalg::matmul::matmul;
use faer::{Accum, Mat, MatRef, Side};

use crate::error::{Error, Result};

/// A symmetric linear operator that can be applied to a block of vectors.
pub trait SymmetricOperator: Sync {
    fn dim(&self) -> usize;

    /// Returns `A * x` for an `n x k` block `x`.
    fn apply(&self, x: MatRef<'_, f64>) -> Mat<f64>;
}

/// Dense operator backed by a materialized matrix.
#[derive(Debug, Clone, Copy)]
pub struct DenseOperator<'a>(pub MatRef<'a, f64>);

impl SymmetricOperator for DenseOperator<'_> {
    fn dim(&self) -> usize {
        self.0.nrows()
    }

    fn apply(&self, x: MatRef<'_, f64>) -> Mat<f64> {
        mul(self.0, x)
    }
}

impl SymmetricOperator for Mat<f64> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: MatRef<'_, f64>) -> Mat<f64> {
        mul(self.as_ref(), x)
    }
}

/// `a * b` using the global faer parallelism setting.
pub fn mul(a: MatRef<'_, f64>, b: MatRef<'_, f64>) -> Mat<f64> {
    let mut out = Mat::<f64>::zeros(a.nrows(), b.ncols());
    matmul(out.as_mut(), Accum::Replace, a, b, 1.0, faer::get_global_parallelism());
    out
}

/// `a^T * b`.
pub fn mul_tn(a: MatRef<'_, f64>, b: MatRef<'_, f64>) -> Mat<f64> {
    mul(a.transpose(), b)
}

pub fn frobenius(a: MatRef<'_, f64>) -> f64 {
    a.norm_l2()
}

/// Largest absolute asymmetry `|a_ij - a_ji|`.
pub fn max_asymmetry(a: MatRef<'_, f64>) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in 0..j {
            worst = worst.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    worst
}

/// `(a + a^T) / 2`.
pub fn symmetrize(a: MatRef<'_, f64>) -> Mat<f64> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| 0.5 * (a[(i, j)] + a[(j, i)]))
}

/// Flips each column so that its entry of largest magnitude is positive
/// (first such entry on ties).
pub fn fix_signs(m: &mut Mat<f64>) {
    for j in 0..m.ncols() {
        let col = m.col(j);
        let mut best = 0usize;
        let mut best_abs = -1.0;
        for i in 0..col.nrows() {
            let v = col[i].abs();
            if v > best_abs {
                best_abs = v;
                best = i;
            }
        }
        if m.nrows() > 0 && m[(best, j)] < 0.0 {
            for i in 0..m.nrows() {
                m[(i, j)] = -m[(i, j)];
            }
        }
    }
}

/// Full eigendecomposition of a symmetric matrix, eigenvalues descending.
pub fn sym_eigen_desc(a: MatRef<'_, f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    let evd = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Numeric(format!("symmetric eigendecomposition failed: {e:?}")))?;
    let n = a.nrows();
    let s = evd.S().column_vector();
    let u = evd.U();
    let values: Vec<f64> = (0..n).rev().map(|i| s[i]).collect();
    let vectors = Mat::from_fn(n, n, |i, j| u[(i, n - 1 - j)]);
    Ok((values, vectors))
}

/// Thin Q factor of a Householder QR, together with `|R_jj|`.
pub fn thin_qr(a: MatRef<'_, f64>) -> (Mat<f64>, Vec<f64>) {
    let qr = a.qr();
    let r = qr.R();
    let k = a.nrows().min(a.ncols());
    let diag = (0..k).map(|j| r[(j, j)].abs()).collect();
    (qr.compute_thin_Q(), diag)
}

/// Makes `v` orthogonal to the columns of `basis` (two Gram-Schmidt passes)
/// and returns its remaining norm; `v` is left unnormalized.
pub fn orthogonalize_against(basis: MatRef<'_, f64>, v: &mut Mat<f64>) -> f64 {
    for _ in 0..2 {
        if basis.ncols() == 0 {
            break;
        }
        let h = mul_tn(basis, v.as_ref());
        let proj = mul(basis, h.as_ref());
        *v -= &proj;
    }
    v.norm_l2()
}

pub fn identity(n: usize) -> Mat<f64> {
    Mat::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 })
}

/// Copies selected columns of `a`.
pub fn select_columns(a: MatRef<'_, f64>, cols: &[usize]) -> Mat<f64> {
    Mat::from_fn(a.nrows(), cols.len(), |i, j| a[(i, cols[j])])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sign_fix_uses_largest_magnitude() {
        let mut m = Mat::from_fn(3, 2, |i, j| [[0.1, 0.5], [-0.9, 0.5], [0.3, -0.2]][i][j]);
        fix_signs(&mut m);
        assert_eq!(m[(1, 0)], 0.9);
        assert_eq!(m[(0, 0)], -0.1);
        // tie between rows 0 and 1: first wins, already positive
        assert_eq!(m[(0, 1)], 0.5);
    }

    #[test]
    fn eigen_desc_order() {
        let a = Mat::from_fn(3, 3, |i, j| if i == j { [1.0, 3.0, 2.0][i] } else { 0.0 });
        let (vals, vecs) = sym_eigen_desc(a.as_ref()).unwrap();
        assert_eq!(vals, vec![3.0, 2.0, 1.0]);
        assert_eq!(vecs[(1, 0)].abs(), 1.0);
    }

    #[test]
    fn orthogonalization_removes_components() {
        let basis = identity(4);
        let basis = basis.as_ref().subcols(0, 2);
        let mut v = Mat::from_fn(4, 1, |i, _| (i + 1) as f64);
        let norm = orthogonalize_against(basis, &mut v);
        assert!((norm - 5.0).abs() < 1e-14);
        assert!(v[(0, 0)].abs() < 1e-15 && v[(1, 0)].abs() < 1e-15);
    }
}

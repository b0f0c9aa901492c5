//! Dense linear algebra on row-major `Vec<f64>` matrices, backed by nalgebra.

use alloc::format;
use alloc::vec::Vec;
use nalgebra::DMatrix;

use crate::{Error, Result};

pub(crate) fn to_dmatrix(n: usize, values: &[f64]) -> DMatrix<f64> {
    DMatrix::from_row_slice(n, n, values)
}

pub(crate) fn from_dmatrix(m: &DMatrix<f64>) -> Vec<f64> {
    let mut out = Vec::with_capacity(m.nrows() * m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(m[(i, j)]);
        }
    }
    out
}

/// Lower Cholesky factor `L` (row-major) of a symmetric positive definite matrix.
pub fn cholesky(n: usize, a: &[f64]) -> Result<Vec<f64>> {
    let m = to_dmatrix(n, a);
    let chol = m
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite(format!("{n}×{n} Cholesky failed")))?;
    Ok(from_dmatrix(&chol.l()))
}

/// Inverse of a symmetric positive definite matrix via Cholesky.
pub fn spd_inverse(n: usize, a: &[f64]) -> Result<Vec<f64>> {
    let m = to_dmatrix(n, a);
    let chol = m
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite(format!("{n}×{n} matrix is not invertible")))?;
    Ok(from_dmatrix(&chol.inverse()))
}

/// Solve `A x = b` for symmetric positive definite `A`.
pub fn spd_solve(n: usize, a: &[f64], b: &[f64]) -> Option<Vec<f64>> {
    let chol = to_dmatrix(n, a).cholesky()?;
    let x = chol.solve(&nalgebra::DVector::from_column_slice(b));
    Some(x.iter().copied().collect())
}

/// `L x` for row-major lower-triangular `L`.
pub fn lower_mul(n: usize, l: &[f64], x: &[f64]) -> Vec<f64> {
    (0..n)
        .map(|i| (0..=i).map(|j| l[i * n + j] * x[j]).sum())
        .collect()
}

/// Solve `Lᵀ x = b` for row-major lower-triangular `L`.
pub fn lower_transpose_solve(n: usize, l: &[f64], b: &[f64]) -> Vec<f64> {
    let mut x = b.to_vec();
    for i in (0..n).rev() {
        let mut v = x[i];
        for j in i + 1..n {
            v -= l[j * n + i] * x[j];
        }
        x[i] = v / l[i * n + i];
    }
    x
}

pub fn symmetric_eigenvalues(n: usize, a: &[f64]) -> Vec<f64> {
    to_dmatrix(n, a).symmetric_eigenvalues().iter().copied().collect()
}

/// Spectral generalized inverse of a symmetric matrix.
///
/// Eigenvalues at or below `rel_tol × λ_max` are treated as zero. Returns the
/// pseudo-inverse and the number of retained eigenvalues.
pub fn symmetric_pinv(n: usize, a: &[f64], rel_tol: f64) -> (Vec<f64>, usize) {
    let eig = to_dmatrix(n, a).symmetric_eigen();
    let max = eig.eigenvalues.iter().copied().fold(0.0f64, f64::max);
    let mut pinv = DMatrix::<f64>::zeros(n, n);
    let mut rank = 0;
    if max > 0.0 {
        for (idx, &lambda) in eig.eigenvalues.iter().enumerate() {
            if lambda > rel_tol * max {
                rank += 1;
                let v = eig.eigenvectors.column(idx);
                pinv += (v * v.transpose()) / lambda;
            }
        }
    }
    (from_dmatrix(&pinv), rank)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transpose_solve_inverts() {
        let l = [2.0, 0.0, 0.0, 1.0, 3.0, 0.0, -1.0, 0.5, 1.5];
        let x = [0.3, -1.2, 2.0];
        // b = Lᵀ x
        let b: Vec<f64> = (0..3).map(|i| (0..3).map(|j| l[j * 3 + i] * x[j]).sum()).collect();
        let got = lower_transpose_solve(3, &l, &b);
        for (g, w) in got.iter().zip(&x) {
            assert!((g - w).abs() < 1e-12);
        }
    }

    #[test]
    fn inverse_and_pinv_agree_on_full_rank() {
        let a = [4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0];
        let inv = spd_inverse(3, &a).unwrap();
        let (pinv, rank) = symmetric_pinv(3, &a, 1e-12);
        assert_eq!(rank, 3);
        for (x, y) in inv.iter().zip(&pinv) {
            assert!((x - y).abs() < 1e-12);
        }
        let l = cholesky(3, &a).unwrap();
        let x = [1.0, -2.0, 0.5];
        // (L Lᵀ) x = A x
        let ltx: Vec<f64> = (0..3).map(|i| (i..3).map(|j| l[j * 3 + i] * x[j]).sum()).collect();
        let llt = lower_mul(3, &l, &ltx);
        for i in 0..3 {
            let ax: f64 = (0..3).map(|j| a[i * 3 + j] * x[j]).sum();
            assert!((llt[i] - ax).abs() < 1e-12);
        }
    }

    #[test]
    fn pinv_of_rank_deficient_matrix() {
        // v vᵀ with v = (1, 2): rank one, pinv = v vᵀ / |v|⁴
        let a = [1.0, 2.0, 2.0, 4.0];
        let (pinv, rank) = symmetric_pinv(2, &a, 1e-10);
        assert_eq!(rank, 1);
        for (x, y) in pinv.iter().zip(a.iter().map(|v| v / 25.0)) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!(cholesky(2, &a).is_err());
    }
}

//! Small dense helpers shared by the solvers.

use alloc::vec::Vec;
use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

pub fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// Returns `(m + mᵀ) / 2`.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Errors unless `m` is square and symmetric within `rel_tol * max|m|`.
pub fn ensure_symmetric(m: &DMatrix<f64>, rel_tol: f64, context: &'static str) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch {
            context,
            expected: m.nrows(),
            found: m.ncols(),
        });
    }
    let asym = max_asymmetry(m);
    if asym > rel_tol * max_abs(m) {
        return Err(Error::NotSymmetric {
            context,
            asymmetry: asym,
        });
    }
    Ok(())
}

pub fn ensure_finite(m: &DMatrix<f64>, context: &'static str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(context))
    }
}

/// Flips each column so its largest-magnitude entry is positive
/// (first such entry on ties).
pub fn fix_column_signs(m: &mut DMatrix<f64>) {
    for mut col in m.column_iter_mut() {
        let mut pivot = 0.0_f64;
        for &v in col.iter() {
            if v.abs() > pivot.abs() {
                pivot = v;
            }
        }
        if pivot < 0.0 {
            col.neg_mut();
        }
    }
}

/// Symmetric eigendecomposition with eigenvalues sorted descending.
///
/// Ties keep the solver's original order. Eigenvector signs are normalized
/// with [`fix_column_signs`] so repeated runs are bit-identical.
pub fn sorted_symmetric_eigen(m: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    ensure_finite(m, "symmetric eigendecomposition")?;
    let n = m.nrows();
    let eig = SymmetricEigen::new(symmetrize(m));
    let mut order: Vec<usize> = (0..n).collect();
    // stable sort keeps the original index order among equal eigenvalues
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(core::cmp::Ordering::Equal)
    });
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    fix_column_signs(&mut vectors);
    Ok((values, vectors))
}

/// Solves `a x = b` for symmetric positive-definite `a`.
pub fn spd_solve(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    context: &'static str,
) -> Result<DMatrix<f64>> {
    let chol = symmetrize(a)
        .cholesky()
        .ok_or(Error::Factorization(context))?;
    Ok(chol.solve(b))
}

/// Solves a general square system `a x = b` with partial-pivot LU.
pub fn lu_solve(a: &DMatrix<f64>, b: &DMatrix<f64>, context: &'static str) -> Result<DMatrix<f64>> {
    let x = a
        .clone()
        .lu()
        .solve(b)
        .ok_or(Error::Factorization(context))?;
    ensure_finite(&x, context)?;
    Ok(x)
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(symmetrize(m))
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |acc, &v| acc.min(v))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_sorted_descending_with_sign_convention() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, 5.0, 0.0, 0.0, 0.0, 3.0]);
        let (vals, vecs) = sorted_symmetric_eigen(&m).unwrap();
        assert_eq!(vals, [5.0, 3.0, 1.0]);
        assert_eq!(vecs[(1, 0)], 1.0);
        assert_eq!(vecs[(2, 1)], 1.0);
        assert_eq!(vecs[(0, 2)], 1.0);
    }

    #[test]
    fn asymmetric_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(matches!(
            ensure_symmetric(&m, 1e-9, "t"),
            Err(Error::NotSymmetric { .. })
        ));
    }
}

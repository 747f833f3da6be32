//! Thin wrappers over `faer` dense factorizations used across the crate.

use faer::linalg::solvers::{DenseSolveCore, Solve};
use faer::{c64, Mat, MatRef, Side};

use crate::error::{Error, Result};

pub fn inverse(a: MatRef<'_, f64>) -> Result<Mat<f64>> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "cannot invert a {}x{} matrix",
            a.nrows(),
            a.ncols()
        )));
    }
    let inv = a.partial_piv_lu().inverse();
    if inv.norm_max().is_finite() {
        Ok(inv)
    } else {
        Err(Error::Factorization("singular matrix in LU inverse".into()))
    }
}

pub fn inverse_complex(a: MatRef<'_, c64>) -> Result<Mat<c64>> {
    let inv = a.partial_piv_lu().inverse();
    if inv.norm_max().is_finite() {
        Ok(inv)
    } else {
        Err(Error::Factorization("singular complex matrix in LU inverse".into()))
    }
}

/// Solves `a x = b` for square `a`.
pub fn solve_complex(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> Mat<c64> {
    a.partial_piv_lu().solve(b)
}

/// 2-norm condition number from the singular values.
pub fn condition_number(a: MatRef<'_, f64>) -> Result<f64> {
    let s = singular_values(a)?;
    let smax = s.first().copied().unwrap_or(0.0);
    let smin = s.last().copied().unwrap_or(0.0);
    if smin <= 0.0 {
        Ok(f64::INFINITY)
    } else {
        Ok(smax / smin)
    }
}

pub fn condition_number_complex(a: MatRef<'_, c64>) -> Result<f64> {
    let s = a
        .singular_values()
        .map_err(|e| Error::Factorization(format!("svd: {e:?}")))?;
    let smax = s.first().copied().unwrap_or(0.0);
    let smin = s.last().copied().unwrap_or(0.0);
    if smin <= 0.0 {
        Ok(f64::INFINITY)
    } else {
        Ok(smax / smin)
    }
}

pub fn singular_values(a: MatRef<'_, f64>) -> Result<Vec<f64>> {
    a.singular_values()
        .map_err(|e| Error::Factorization(format!("svd: {e:?}")))
}

/// Full SVD `a = U S Vᵀ`; singular values are nonincreasing.
pub fn svd(a: MatRef<'_, f64>) -> Result<(Mat<f64>, Vec<f64>, Mat<f64>)> {
    let svd = a
        .svd()
        .map_err(|e| Error::Factorization(format!("svd: {e:?}")))?;
    let s = svd.S().column_vector().iter().copied().collect();
    Ok((svd.U().to_owned(), s, svd.V().to_owned()))
}

/// Lower Cholesky factor `L` with `a = L Lᵀ`.
pub fn cholesky_lower(a: MatRef<'_, f64>) -> Result<Mat<f64>> {
    let llt = a
        .llt(Side::Lower)
        .map_err(|e| Error::Factorization(format!("cholesky: {e:?}")))?;
    Ok(llt.L().to_owned())
}

/// Solves `l x = b` in place for lower-triangular `l`.
pub fn solve_lower_in_place(l: MatRef<'_, f64>, b: &mut Mat<f64>) {
    l.solve_lower_triangular_in_place(b.as_mut());
}

/// Solves `lᵀ x = b` in place for lower-triangular `l`.
pub fn solve_lower_transpose_in_place(l: MatRef<'_, f64>, b: &mut Mat<f64>) {
    l.transpose().solve_upper_triangular_in_place(b.as_mut());
}

/// Eigen-decomposition of a real symmetric matrix; eigenvalues ascending, orthonormal vectors.
pub fn symmetric_eigen(a: MatRef<'_, f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    let evd = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::EigenSolver(format!("symmetric evd: {e:?}")))?;
    let s = evd.S().column_vector().iter().copied().collect();
    Ok((s, evd.U().to_owned()))
}

pub fn symmetric_eigenvalues(a: MatRef<'_, f64>) -> Result<Vec<f64>> {
    a.self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::EigenSolver(format!("symmetric evd: {e:?}")))
}

/// Eigen-decomposition of a complex Hermitian matrix; eigenvalues ascending, unitary vectors.
pub fn hermitian_eigen(a: MatRef<'_, c64>) -> Result<(Vec<f64>, Mat<c64>)> {
    let evd = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::EigenSolver(format!("hermitian evd: {e:?}")))?;
    let s = evd.S().column_vector().iter().map(|z| z.re).collect();
    Ok((s, evd.U().to_owned()))
}

/// Eigen-decomposition of a general real matrix.
pub fn eigen(a: MatRef<'_, f64>) -> Result<(Vec<c64>, Mat<c64>)> {
    let evd = a
        .eigen()
        .map_err(|e| Error::EigenSolver(format!("nonsymmetric evd: {e:?}")))?;
    let s = evd.S().column_vector().iter().copied().collect();
    Ok((s, evd.U().to_owned()))
}

pub fn eigenvalues(a: MatRef<'_, f64>) -> Result<Vec<c64>> {
    a.eigenvalues()
        .map_err(|e| Error::EigenSolver(format!("nonsymmetric evd: {e:?}")))
}

pub fn eigenvalues_complex(a: MatRef<'_, c64>) -> Result<Vec<c64>> {
    a.eigenvalues()
        .map_err(|e| Error::EigenSolver(format!("complex evd: {e:?}")))
}

pub fn to_complex(a: MatRef<'_, f64>) -> Mat<c64> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| c64::new(a[(i, j)], 0.0))
}

pub fn max_abs(a: MatRef<'_, f64>) -> f64 {
    a.norm_max()
}

/// Largest entry of `a + aᵀ` in absolute value.
pub fn skew_defect(a: MatRef<'_, f64>) -> f64 {
    let n = a.nrows();
    let mut m = 0.0f64;
    for j in 0..n {
        for i in 0..n {
            m = m.max((a[(i, j)] + a[(j, i)]).abs());
        }
    }
    m
}

/// Largest entry of `a - aᵀ` in absolute value.
pub fn symmetry_defect(a: MatRef<'_, f64>) -> f64 {
    let n = a.nrows();
    let mut m = 0.0f64;
    for j in 0..n {
        for i in 0..n {
            m = m.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    m
}

pub fn mat_vec(a: MatRef<'_, f64>, x: &[f64]) -> Vec<f64> {
    assert_eq!(a.ncols(), x.len());
    let mut y = vec![0.0; a.nrows()];
    for (j, &xj) in x.iter().enumerate() {
        if xj == 0.0 {
            continue;
        }
        let col = a.col(j);
        for (yi, aij) in y.iter_mut().zip(col.iter()) {
            *yi += aij * xj;
        }
    }
    y
}

pub fn column(a: MatRef<'_, f64>, j: usize) -> Vec<f64> {
    a.col(j).iter().copied().collect()
}

pub fn column_complex(a: MatRef<'_, c64>, j: usize) -> Vec<c64> {
    a.col(j).iter().copied().collect()
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn norm(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

pub fn norm_complex(x: &[c64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

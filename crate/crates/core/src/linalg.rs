//! Small dense linear-algebra helpers shared across modules.

use crate::error::{Error, Result};
use crate::types::Matrix;

pub(crate) fn all_finite(m: &Matrix) -> bool {
    m.iter().all(|v| v.is_finite())
}

pub(crate) fn is_symmetric(m: &Matrix, tol: f64) -> bool {
    if !m.is_square() {
        return false;
    }
    let scale = m.amax().max(1.0);
    let n = m.nrows();
    (0..n).all(|i| (0..i).all(|j| (m[(i, j)] - m[(j, i)]).abs() <= tol * scale))
}

pub(crate) fn symmetrize(m: &Matrix) -> Matrix {
    (m + m.transpose()) * 0.5
}

/// Smallest eigenvalue of a symmetric matrix.
pub(crate) fn min_symmetric_eigenvalue(m: &Matrix) -> f64 {
    symmetrize(m)
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

pub(crate) fn max_symmetric_eigenvalue(m: &Matrix) -> f64 {
    symmetrize(m)
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Lower Cholesky factor of a symmetric positive definite matrix.
pub(crate) fn cholesky_lower(m: &Matrix, what: &'static str) -> Result<Matrix> {
    if !m.is_square() || !all_finite(m) || !is_symmetric(m, 1e-12) {
        return Err(Error::NotPositiveDefinite(what));
    }
    nalgebra::Cholesky::new(symmetrize(m))
        .map(|c| c.l())
        .ok_or(Error::NotPositiveDefinite(what))
}

/// Eigenvalues `(re, im)` via a real Schur decomposition.
pub(crate) fn eigenvalues(m: &Matrix) -> Result<Vec<(f64, f64)>> {
    if !m.is_square() {
        return Err(Error::InvalidArgument("matrix must be square".into()));
    }
    if !all_finite(m) {
        return Err(Error::EigenFailure);
    }
    let schur = m
        .clone()
        .try_schur(f64::EPSILON, 10_000)
        .ok_or(Error::EigenFailure)?;
    Ok(schur
        .complex_eigenvalues()
        .iter()
        .map(|z| (z.re, z.im))
        .collect())
}

pub(crate) fn spectral_abscissa(m: &Matrix) -> Result<f64> {
    Ok(eigenvalues(m)?
        .into_iter()
        .map(|(re, _)| re)
        .fold(f64::NEG_INFINITY, f64::max))
}

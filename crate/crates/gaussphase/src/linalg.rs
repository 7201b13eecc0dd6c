//! Small dense linear-algebra helpers shared across modules.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type RMat = DMatrix<f64>;
pub type CMat = DMatrix<Complex64>;

pub fn to_complex(m: &RMat) -> CMat {
    m.map(|x| Complex64::new(x, 0.0))
}

pub fn max_abs(m: &RMat) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

pub fn symmetrize(m: &RMat) -> RMat {
    (m + m.transpose()) * 0.5
}

/// Eigenvalues of a general complex matrix via the complex Schur form.
pub fn complex_eigenvalues(m: &CMat) -> Result<Vec<Complex64>> {
    m.clone()
        .try_schur(1e-15, 10_000)
        .and_then(|s| s.eigenvalues())
        .map(|v| v.iter().copied().collect())
        .ok_or_else(|| Error::Numerical("complex Schur decomposition did not converge".into()))
}

/// Eigenvalues of a general real matrix.
///
/// Goes through the complex Schur form: the real-arithmetic routine returns NaN
/// for defective eigenvalues such as those of a shear.
pub fn real_matrix_eigenvalues(m: &RMat) -> Result<Vec<Complex64>> {
    complex_eigenvalues(&to_complex(m))
}

/// Product of the principal square roots of the eigenvalues of `m`.
///
/// For the matrices that appear in the trace formulas every eigenvalue has a
/// nonnegative real part, so each principal root is continuous in the state and
/// the product carries the correct sign, unlike the principal root of the
/// determinant.
pub fn product_of_eigen_roots(m: &CMat) -> Result<Complex64> {
    Ok(complex_eigenvalues(m)?
        .into_iter()
        .fold(Complex64::new(1.0, 0.0), |acc, l| acc * l.sqrt()))
}

pub fn complex_det(m: &CMat) -> Complex64 {
    m.clone().lu().determinant()
}

/// The square root of `det` on the same branch as `approx`.
///
/// A product of eigenvalue roots fixes the branch reliably but loses relative
/// accuracy when the eigenvalues spread over many orders of magnitude; the LU
/// determinant does not.
pub fn root_on_branch(det: Complex64, approx: Complex64) -> Complex64 {
    let r = det.sqrt();
    if (r - approx).norm() <= (r + approx).norm() {
        r
    } else {
        -r
    }
}

/// Square root of a symmetric positive semidefinite matrix.
pub fn sym_sqrt(m: &RMat) -> RMat {
    sym_apply(m, |x| x.max(0.0).sqrt())
}

/// Applies a scalar function to a symmetric matrix through its eigenvalues.
pub fn sym_apply(m: &RMat, f: impl Fn(f64) -> f64) -> RMat {
    let eig = symmetrize(m).symmetric_eigen();
    let d = DVector::from_iterator(eig.eigenvalues.len(), eig.eigenvalues.iter().map(|&x| f(x)));
    &eig.eigenvectors * DMatrix::from_diagonal(&d) * eig.eigenvectors.transpose()
}

pub fn min_sym_eigenvalue(m: &RMat) -> f64 {
    symmetrize(m).symmetric_eigen().eigenvalues.min()
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_hermitian_eigenvalue(m: &CMat) -> f64 {
    let h = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    h.symmetric_eigen().eigenvalues.min()
}

/// Wraps an angle into (−π, π].
pub fn wrap_angle(x: f64) -> f64 {
    use std::f64::consts::PI;
    let mut y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y -= 2.0 * PI;
    }
    y
}

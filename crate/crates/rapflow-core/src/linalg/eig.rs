use super::{check_finite, check_square, row_norm_inf, Matrix, RowVector};
use crate::{Error, Result};
use nalgebra::linalg::Schur;

const QR_MAX_ITER: usize = 100_000;

/// Max real part over the eigenvalues of `A` (dense QR iteration on the
/// real Schur form; complex pairs handled).
pub fn spectral_abscissa(a: &Matrix) -> Result<f64> {
    check_square(a)?;
    check_finite(a, "spectral_abscissa input")?;
    if a.nrows() == 1 {
        return Ok(a[(0, 0)]);
    }
    let schur = Schur::try_new(a.clone(), f64::EPSILON, QR_MAX_ITER).ok_or(Error::EigenNoConverge)?;
    Ok(schur
        .complex_eigenvalues()
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Number of eigenvalues of `M` inside the box `|Re| < tol, |Im| < tol`.
pub fn eigen_count_near_zero(m: &Matrix, tol: f64) -> Result<usize> {
    check_square(m)?;
    check_finite(m, "eigen_count_near_zero input")?;
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument {
            what: format!("eigenvalue box width must be positive, got {tol}"),
        });
    }
    if m.nrows() == 1 {
        return Ok(usize::from(m[(0, 0)].abs() < tol));
    }
    let schur =
        Schur::try_new(m.clone(), f64::EPSILON, QR_MAX_ITER).ok_or(Error::EigenNoConverge)?;
    Ok(schur
        .complex_eigenvalues()
        .iter()
        .filter(|z| z.re.abs() < tol && z.im.abs() < tol)
        .count())
}

/// Left null vector of `M`, normalized so `v . 1 = 1`.
///
/// Requires a *simple* zero eigenvalue: exactly one eigenvalue inside the
/// box `|Re| < tol, |Im| < tol`. The vector itself comes from the singular
/// direction of the smallest singular value, and is checked against
/// `|vM|_inf <= tol`. The tolerance is absolute on purpose: callers scale
/// it to the problem, and `M` itself may be a near-cancellation whose norm
/// says nothing about that scale.
pub fn left_null_vector(m: &Matrix, tol: f64) -> Result<RowVector> {
    let zeros = eigen_count_near_zero(m, tol)?;
    if zeros == 0 {
        return Err(Error::EigenzeroViolation {
            detail: format!("no eigenvalue within {tol:.3e} of zero"),
        });
    }
    if zeros > 1 {
        return Err(Error::EigenzeroViolation {
            detail: format!("zero eigenvalue has multiplicity {zeros} within {tol:.3e}"),
        });
    }

    // v M = 0 means v' spans the left singular direction of the smallest
    // singular value.
    let svd = m.clone().svd(true, false);
    let u = svd.u.as_ref().expect("u requested");
    let mut idx = 0;
    for (i, s) in svd.singular_values.iter().enumerate() {
        if *s < svd.singular_values[idx] {
            idx = i;
        }
    }
    let mut v = u.column(idx).transpose();

    let sum: f64 = v.iter().sum();
    if sum.abs() < 1e-300 {
        return Err(Error::EigenzeroViolation {
            detail: "null vector has zero sum; cannot normalize to v.1 = 1".into(),
        });
    }
    v /= sum;

    let residual = row_norm_inf(&(&v * m));
    if residual > tol {
        return Err(Error::EigenzeroViolation {
            detail: format!("normalized null vector leaves residual {residual:.3e}"),
        });
    }
    Ok(v)
}

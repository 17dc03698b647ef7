use super::{check_finite, check_square, norm_inf, ColVector, Matrix};
use crate::{tol, Error, Result};
use nalgebra::linalg::FullPivLU;
use nalgebra::Dyn;

/// Solves `AX + XB = Q` by Kronecker vectorization and a dense LU solve.
///
/// Intended for desk-scale systems (dimensions up to a few tens); the
/// Kronecker system is dense of size `(m*n)^2`.
pub fn sylvester_solve(a: &Matrix, b: &Matrix, q: &Matrix) -> Result<Matrix> {
    sylvester_solve_with_tol(a, b, q, tol::SYLVESTER_RESIDUAL)
}

/// As [`sylvester_solve`] with an explicit residual tolerance:
/// `|AX + XB - Q|_inf <= tol * max(1, |Q|_inf)`.
pub fn sylvester_solve_with_tol(a: &Matrix, b: &Matrix, q: &Matrix, tol: f64) -> Result<Matrix> {
    FactoredSylvester::new(a.clone(), b.clone())?.solve_with_tol(q, tol)
}

/// `AX + XB = Q` with `A` and `B` fixed: the Kronecker system is factored
/// once and reused across right-hand sides (the first-return iteration
/// solves thousands to millions of these).
pub struct FactoredSylvester {
    a: Matrix,
    b: Matrix,
    lu: FullPivLU<f64, Dyn, Dyn>,
}

impl FactoredSylvester {
    pub fn new(a: Matrix, b: Matrix) -> Result<Self> {
        check_square(&a)?;
        check_square(&b)?;
        check_finite(&a, "sylvester A")?;
        check_finite(&b, "sylvester B")?;
        let m = a.nrows();
        let n = b.nrows();
        // vec(AX + XB) = (I (x) A + B' (x) I) vec(X), column-stacked.
        let system =
            Matrix::identity(n, n).kronecker(&a) + b.transpose().kronecker(&Matrix::identity(m, m));
        Ok(FactoredSylvester {
            a,
            b,
            lu: system.full_piv_lu(),
        })
    }

    pub fn solve(&self, q: &Matrix) -> Result<Matrix> {
        self.solve_with_tol(q, tol::SYLVESTER_RESIDUAL)
    }

    pub fn solve_with_tol(&self, q: &Matrix, tol: f64) -> Result<Matrix> {
        check_finite(q, "sylvester Q")?;
        let m = self.a.nrows();
        let n = self.b.nrows();
        if q.nrows() != m || q.ncols() != n {
            return Err(Error::Dimension {
                what: format!(
                    "sylvester Q must be {}x{}, got {}x{}",
                    m,
                    n,
                    q.nrows(),
                    q.ncols()
                ),
            });
        }
        let rhs = ColVector::from_column_slice(q.as_slice());
        let x = self
            .lu
            .solve(&rhs)
            .ok_or_else(|| Error::SylvesterSingular {
                detail: "A and -B share an eigenvalue".into(),
            })?;
        let x = Matrix::from_column_slice(m, n, x.as_slice());

        let residual = norm_inf(&(&self.a * &x + &x * &self.b - q));
        let bound = tol * norm_inf(q).max(1.0);
        if !residual.is_finite() || residual > bound {
            return Err(Error::SylvesterSingular {
                detail: format!(
                    "residual {residual:.3e} exceeds {bound:.3e}; A and -B have (near-)shared spectrum"
                ),
            });
        }
        Ok(x)
    }
}

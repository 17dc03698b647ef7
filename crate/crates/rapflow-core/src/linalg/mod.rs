//! Dense real-matrix kernels: matrix exponential, Sylvester solve,
//! spectral abscissa, left null vectors.
//!
//! Everything operates on `f64` nalgebra types at desk scale (dimensions in
//! the tens). All functions are pure.

mod eig;
mod expm;
mod sylvester;

pub use eig::{eigen_count_near_zero, left_null_vector, spectral_abscissa};
pub use expm::expm;
pub use sylvester::{sylvester_solve, sylvester_solve_with_tol, FactoredSylvester};

use crate::{Error, Result};

pub type Matrix = nalgebra::DMatrix<f64>;
pub type RowVector = nalgebra::RowDVector<f64>;
pub type ColVector = nalgebra::DVector<f64>;

/// All-ones column vector.
pub fn ones(n: usize) -> ColVector {
    ColVector::repeat(n, 1.0)
}

/// Max absolute row sum.
pub fn norm_inf(a: &Matrix) -> f64 {
    (0..a.nrows())
        .map(|i| a.row(i).iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Max absolute column sum.
pub fn norm_1(a: &Matrix) -> f64 {
    (0..a.ncols())
        .map(|j| a.column(j).iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Max absolute entry of a row vector.
pub fn row_norm_inf(v: &RowVector) -> f64 {
    v.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

pub(crate) fn check_square(a: &Matrix) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(Error::NonSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    Ok(())
}

pub(crate) fn check_finite(a: &Matrix, what: &str) -> Result<()> {
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite { what: what.into() });
    }
    Ok(())
}

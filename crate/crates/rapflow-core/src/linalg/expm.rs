use super::{check_finite, check_square, norm_1, Matrix};
use crate::{Error, Result};

/// Numerator coefficients of the degree-13 diagonal Pade approximant to e^x.
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// 1-norm bound under which the degree-13 approximant is accurate to
/// machine precision without further scaling.
const THETA13: f64 = 5.371920351148152;

/// `e^{At}` by scaling and squaring with a fixed degree-13 diagonal Pade
/// approximant; the squaring count comes from the 1-norm of `At`.
pub fn expm(a: &Matrix, t: f64) -> Result<Matrix> {
    check_square(a)?;
    check_finite(a, "expm input")?;
    if !t.is_finite() || t < 0.0 {
        return Err(Error::InvalidArgument {
            what: format!("expm requires t >= 0, got {t}"),
        });
    }
    let n = a.nrows();
    if n == 1 {
        return Ok(Matrix::from_element(1, 1, (a[(0, 0)] * t).exp()));
    }
    let m = a * t;
    let norm = norm_1(&m);
    let s = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as u32
    } else {
        0
    };
    let m = m / 2f64.powi(s as i32);

    let id = Matrix::identity(n, n);
    let m2 = &m * &m;
    let m4 = &m2 * &m2;
    let m6 = &m4 * &m2;
    // u holds the odd part (times m), v the even part.
    let u = &m
        * (&m6 * (&m6 * PADE13[13] + &m4 * PADE13[11] + &m2 * PADE13[9])
            + &m6 * PADE13[7]
            + &m4 * PADE13[5]
            + &m2 * PADE13[3]
            + &id * PADE13[1]);
    let v = &m6 * (&m6 * PADE13[12] + &m4 * PADE13[10] + &m2 * PADE13[8])
        + &m6 * PADE13[6]
        + &m4 * PADE13[4]
        + &m2 * PADE13[2]
        + &id * PADE13[0];

    let denom = &v - &u;
    let numer = &v + &u;
    let mut r = denom
        .lu()
        .solve(&numer)
        .ok_or_else(|| Error::NonFinite {
            what: "expm Pade denominator is singular".into(),
        })?;
    for _ in 0..s {
        r = &r * &r;
    }
    Ok(r)
}

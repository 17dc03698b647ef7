use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rapflow_core::linalg::{
    expm, left_null_vector, norm_inf, spectral_abscissa, sylvester_solve, Matrix, RowVector,
};
use rapflow_core::Error;

fn max_abs_diff(a: &Matrix, b: &Matrix) -> f64 {
    (a - b).iter().map(|x| x.abs()).fold(0.0, f64::max)
}

/// Random matrix with spectral abscissa at most -margin.
fn random_stable(rng: &mut StdRng, n: usize, margin: f64) -> Matrix {
    let a = Matrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    let shift = spectral_abscissa(&a).unwrap() + margin;
    a - Matrix::identity(n, n) * shift
}

#[test]
fn expm_zero_time_is_identity() {
    let a = Matrix::from_row_slice(3, 3, &[0.3, -1.2, 0.0, 4.0, 0.5, -2.0, 1.0, 1.0, -3.0]);
    let e = expm(&a, 0.0).unwrap();
    assert_eq!(max_abs_diff(&e, &Matrix::identity(3, 3)), 0.0);
}

#[test]
fn expm_diagonal_matches_scalar_exponentials() {
    let a = Matrix::from_diagonal(&nalgebra::dvector![-1.0, -2.0]);
    let e = expm(&a, 1.0).unwrap();
    let expected = Matrix::from_diagonal(&nalgebra::dvector![(-1f64).exp(), (-2f64).exp()]);
    assert!(max_abs_diff(&e, &expected) <= 1e-14);
}

#[test]
fn expm_closed_forms() {
    // Nilpotent: e^{At} = I + At.
    let a = Matrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
    let e = expm(&a, 0.7).unwrap();
    let expected = Matrix::from_row_slice(2, 2, &[1.0, 0.7, 0.0, 1.0]);
    assert!(max_abs_diff(&e, &expected) <= 1e-14);

    // Rotation generator: e^{At} = [[cos t, sin t], [-sin t, cos t]].
    let a = Matrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
    for t in [0.3, 1.0, 3.7, 11.0] {
        let e = expm(&a, t).unwrap();
        let expected = Matrix::from_row_slice(2, 2, &[t.cos(), t.sin(), -t.sin(), t.cos()]);
        assert!(
            max_abs_diff(&e, &expected) <= 1e-12,
            "rotation t={t}: {:.3e}",
            max_abs_diff(&e, &expected)
        );
    }

    // Jordan block: e^{St} = e^{-t} [[1, t], [0, 1]].
    let s = Matrix::from_row_slice(2, 2, &[-1.0, 1.0, 0.0, -1.0]);
    let e = expm(&s, 2.5).unwrap();
    let f = (-2.5f64).exp();
    let expected = Matrix::from_row_slice(2, 2, &[f, 2.5 * f, 0.0, f]);
    assert!(max_abs_diff(&e, &expected) <= 1e-13);
}

#[test]
fn expm_semigroup_on_random_stable_4x4() {
    let mut rng = StdRng::seed_from_u64(7);
    for _ in 0..20 {
        let a = random_stable(&mut rng, 4, 0.2);
        let t = rng.gen_range(0.0..2.5);
        let half = expm(&a, t).unwrap();
        let full = expm(&a, 2.0 * t).unwrap();
        assert!(
            max_abs_diff(&full, &(&half * &half)) <= 1e-10,
            "semigroup gap {:.3e}",
            max_abs_diff(&full, &(&half * &half))
        );
    }
}

#[test]
fn expm_semigroup_split_times() {
    let mut rng = StdRng::seed_from_u64(8);
    for _ in 0..50 {
        let n = rng.gen_range(1..=5);
        let a = random_stable(&mut rng, n, 0.1);
        let t = rng.gen_range(0.0..5.0);
        let s = rng.gen_range(0.0..5.0);
        let lhs = expm(&a, t).unwrap() * expm(&a, s).unwrap();
        let rhs = expm(&a, t + s).unwrap();
        assert!(max_abs_diff(&lhs, &rhs) <= 1e-9);
    }
}

#[test]
fn expm_rejects_bad_input() {
    let rect = Matrix::zeros(2, 3);
    assert!(matches!(expm(&rect, 1.0), Err(Error::NonSquare { .. })));

    let nan = Matrix::from_element(2, 2, f64::NAN);
    assert!(matches!(expm(&nan, 1.0), Err(Error::NonFinite { .. })));

    let a = Matrix::identity(2, 2);
    assert!(matches!(
        expm(&a, -1.0),
        Err(Error::InvalidArgument { .. })
    ));
}

#[test]
fn sylvester_scalar_cases() {
    // -x - x = -1  =>  x = 0.5
    let x = sylvester_solve(
        &Matrix::from_element(1, 1, -1.0),
        &Matrix::from_element(1, 1, -1.0),
        &Matrix::from_element(1, 1, -1.0),
    )
    .unwrap();
    assert!((x[(0, 0)] - 0.5).abs() <= 1e-14);

    // -2x - x = -2  =>  x = 2/3
    let x = sylvester_solve(
        &Matrix::from_element(1, 1, -2.0),
        &Matrix::from_element(1, 1, -1.0),
        &Matrix::from_element(1, 1, -2.0),
    )
    .unwrap();
    assert!((x[(0, 0)] - 2.0 / 3.0).abs() <= 1e-14);
}

#[test]
fn sylvester_residual_on_random_pair() {
    let mut rng = StdRng::seed_from_u64(11);
    let a = random_stable(&mut rng, 3, 0.2);
    let b = random_stable(&mut rng, 2, 0.2);
    let q = Matrix::from_fn(3, 2, |_, _| rng.gen_range(-1.0..1.0));
    let x = sylvester_solve(&a, &b, &q).unwrap();
    let residual = norm_inf(&(&a * &x + &x * &b - &q));
    assert!(residual <= 1e-10 * norm_inf(&q).max(1.0));
}

#[test]
fn sylvester_residual_over_1000_random_instances() {
    let mut rng = StdRng::seed_from_u64(12);
    for _ in 0..1000 {
        let m = rng.gen_range(1..=8);
        let n = rng.gen_range(1..=8);
        // Stable A and B keep the spectra of A and -B strictly separated.
        let a = random_stable(&mut rng, m, 0.05);
        let b = random_stable(&mut rng, n, 0.05);
        let q = Matrix::from_fn(m, n, |_, _| rng.gen_range(-2.0..2.0));
        let x = sylvester_solve(&a, &b, &q).unwrap();
        let residual = norm_inf(&(&a * &x + &x * &b - &q));
        assert!(
            residual <= 1e-10 * norm_inf(&q).max(1.0),
            "dims {m}x{n}: residual {residual:.3e}"
        );
    }
}

#[test]
fn sylvester_shared_spectrum_is_an_error() {
    // A = [-1], -B = [-1]: the Kronecker system is exactly singular.
    let err = sylvester_solve(
        &Matrix::from_element(1, 1, -1.0),
        &Matrix::from_element(1, 1, 1.0),
        &Matrix::from_element(1, 1, 1.0),
    )
    .unwrap_err();
    assert!(matches!(err, Error::SylvesterSingular { .. }));
    assert!(err.to_string().starts_with("sylvester-singular"));
}

#[test]
fn sylvester_rejects_mismatched_q() {
    let a = Matrix::from_element(1, 1, -1.0);
    let b = Matrix::identity(2, 2) * -1.0;
    let q = Matrix::zeros(2, 2);
    assert!(matches!(
        sylvester_solve(&a, &b, &q),
        Err(Error::Dimension { .. })
    ));
}

#[test]
fn spectral_abscissa_examples() {
    let a = Matrix::from_diagonal(&nalgebra::dvector![-1.0, -3.0]);
    assert!((spectral_abscissa(&a).unwrap() + 1.0).abs() <= 1e-12);

    // Eigenvalues +-i: abscissa 0.
    let a = Matrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
    assert!(spectral_abscissa(&a).unwrap().abs() <= 1e-9);

    // Conservative generator: row sums zero force eigenvalue 0.
    let a = Matrix::from_row_slice(2, 2, &[-2.0, 2.0, 1.0, -1.0]);
    assert!(spectral_abscissa(&a).unwrap().abs() <= 1e-9);
}

#[test]
fn spectral_abscissa_complex_spectrum() {
    // Companion-style matrix with eigenvalues -1 +- 2i and -0.25.
    let a = Matrix::from_row_slice(
        3,
        3,
        &[
            -1.0, 2.0, 0.0, //
            -2.0, -1.0, 0.0, //
            0.0, 0.0, -0.25,
        ],
    );
    assert!((spectral_abscissa(&a).unwrap() + 0.25).abs() <= 1e-9);
}

#[test]
fn left_null_vector_examples() {
    let v = left_null_vector(&Matrix::from_element(1, 1, 0.0), 1e-9).unwrap();
    assert_eq!(v, RowVector::from_row_slice(&[1.0]));

    let m = Matrix::from_row_slice(2, 2, &[-1.0, 1.0, 2.0, -2.0]);
    let v = left_null_vector(&m, 1e-9).unwrap();
    assert!((v[0] - 2.0 / 3.0).abs() <= 1e-12);
    assert!((v[1] - 1.0 / 3.0).abs() <= 1e-12);
    assert!((v.iter().sum::<f64>() - 1.0).abs() <= 1e-15);
    let residual = (&v * &m).iter().map(|x| x.abs()).fold(0.0, f64::max);
    assert!(residual <= 1e-9 * norm_inf(&m));
}

#[test]
fn left_null_vector_requires_zero_eigenvalue() {
    let m = Matrix::from_diagonal(&nalgebra::dvector![-1.0, -2.0]);
    let err = left_null_vector(&m, 1e-9).unwrap_err();
    assert!(matches!(err, Error::EigenzeroViolation { .. }));
    assert!(err.to_string().starts_with("eigenzero-violation"));
}

#[test]
fn left_null_vector_rejects_multiplicity() {
    // Two independent conservative blocks: zero eigenvalue twice.
    let m = Matrix::from_row_slice(
        4,
        4,
        &[
            -1.0, 1.0, 0.0, 0.0, //
            1.0, -1.0, 0.0, 0.0, //
            0.0, 0.0, -2.0, 2.0, //
            0.0, 0.0, 2.0, -2.0,
        ],
    );
    let err = left_null_vector(&m, 1e-9).unwrap_err();
    assert!(matches!(err, Error::EigenzeroViolation { .. }));
}

#[test]
fn left_null_vector_scale_invariance() {
    let m = Matrix::from_row_slice(3, 3, &[-3.0, 2.0, 1.0, 1.0, -1.5, 0.5, 2.0, 2.0, -4.0]);
    let v1 = left_null_vector(&m, 1e-9).unwrap();
    let v2 = left_null_vector(&(&m * 7.5), 1e-8).unwrap();
    for i in 0..3 {
        assert!((v1[i] - v2[i]).abs() <= 1e-10);
    }
}

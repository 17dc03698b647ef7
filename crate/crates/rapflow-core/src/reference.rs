//! Canonical scalar and small reference models with closed-form targets.
//!
//! These are the models the test suite and the acceptance gate exercise;
//! they double as quick-start examples. Closed forms for the scalar family
//! (up-exit rate `a`, down-exit rate `b`, so `C+ = [-a]`, `C- = [-b]`,
//! `D+- = [a]`, `D-+ = [b]`): the first-return matrix is the minimal root
//! of `b psi^2 - (a + b) psi + a = 0`.

use crate::linalg::{Matrix, RowVector};
use crate::model::{BlockStructure, MePhase, RapFluidModel, Regime, RegimePhases, Routing, ZeroBlocks};

fn scalar(x: f64) -> Matrix {
    Matrix::from_element(1, 1, x)
}

/// Stable scalar model: up-exit rate 2, down-exit rate 1. First-return
/// matrix 1, boundary atom 1/3, stationary density `(2/3) e^{-x}`.
pub fn m1() -> RapFluidModel {
    RapFluidModel::new(
        BlockStructure::singletons(1, 1, 0).unwrap(),
        scalar(-2.0),
        scalar(-1.0),
        scalar(2.0),
        scalar(1.0),
        None,
    )
    .unwrap()
}

/// Transient scalar model: up-exit rate 1, down-exit rate 2. First-return
/// matrix 0.5; no stationary distribution.
pub fn m2() -> RapFluidModel {
    RapFluidModel::new(
        BlockStructure::singletons(1, 1, 0).unwrap(),
        scalar(-1.0),
        scalar(-2.0),
        scalar(1.0),
        scalar(2.0),
        None,
    )
    .unwrap()
}

/// Symmetric scalar model (both exit rates 1): first-return matrix 1 as a
/// double root, null recurrent, crossing generator abscissa 0.
pub fn m3() -> RapFluidModel {
    RapFluidModel::new(
        BlockStructure::singletons(1, 1, 0).unwrap(),
        scalar(-1.0),
        scalar(-1.0),
        scalar(1.0),
        scalar(1.0),
        None,
    )
    .unwrap()
}

/// M1 with a scalar zero-slope regime spliced between up and down phases;
/// censoring the zero regime reproduces M1 exactly. Censored boundary atom
/// 1/4, censored density `(3/4) e^{-x}`.
pub fn m4() -> RapFluidModel {
    RapFluidModel::new(
        BlockStructure::singletons(1, 1, 1).unwrap(),
        scalar(-2.0),
        scalar(-1.0),
        scalar(1.0),
        scalar(1.0),
        Some(ZeroBlocks {
            c_zero: scalar(-1.0),
            d_plus_zero: scalar(1.0),
            d_zero_plus: scalar(0.0),
            d_minus_zero: scalar(0.0),
            d_zero_minus: scalar(1.0),
        }),
    )
    .unwrap()
}

/// Symmetric Erlang-2 stage model on both regimes; null recurrent like M3
/// but with genuine 2x2 orbit dynamics.
pub fn erlang2_me() -> RapFluidModel {
    let alpha = RowVector::from_row_slice(&[1.0, 0.0]);
    let s = Matrix::from_row_slice(2, 2, &[-1.0, 1.0, 0.0, -1.0]);
    RapFluidModel::from_me_renewal(&alpha, &s, &alpha, &s).unwrap()
}

/// Markov-renewal model with two matrix-exponential blocks in the plus
/// regime (an exponential and an Erlang-2) and one 2-phase block in the
/// minus regime. Exercises intra-regime routing and non-trivial landing
/// vectors; no closed form, used for oracle-equivalence checks.
pub fn markov_renewal_two_block() -> RapFluidModel {
    let phases = RegimePhases {
        plus: vec![
            MePhase::new(
                RowVector::from_row_slice(&[1.0]),
                Matrix::from_row_slice(1, 1, &[-1.0]),
            )
            .unwrap(),
            MePhase::new(
                RowVector::from_row_slice(&[1.0, 0.0]),
                Matrix::from_row_slice(2, 2, &[-2.0, 2.0, 0.0, -2.0]),
            )
            .unwrap(),
        ],
        minus: vec![MePhase::new(
            RowVector::from_row_slice(&[0.7, 0.3]),
            Matrix::from_row_slice(2, 2, &[-3.0, 1.0, 0.0, -1.0]),
        )
        .unwrap()],
        zero: vec![],
    };
    let mut routing = Routing::default();
    routing.matrices.insert(
        (Regime::Plus, Regime::Plus),
        Matrix::from_row_slice(2, 2, &[0.0, 0.3, 0.0, 0.0]),
    );
    routing.matrices.insert(
        (Regime::Plus, Regime::Minus),
        Matrix::from_row_slice(2, 1, &[0.7, 1.0]),
    );
    routing.matrices.insert(
        (Regime::Minus, Regime::Plus),
        Matrix::from_row_slice(1, 2, &[0.5, 0.5]),
    );
    RapFluidModel::from_markov_renewal_me(&phases, &routing).unwrap()
}

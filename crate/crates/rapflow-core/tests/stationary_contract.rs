//! Stationary-law contract: scalar closed forms, the censored boundary
//! model, stability refusals, and the mass-accounting invariants.

use approx::assert_abs_diff_eq;
use rapflow_core::linalg::Matrix;
use rapflow_core::model::{BlockStructure, RapFluidModel, Regime};
use rapflow_core::passage::{psi_for_model, record_generators};
use rapflow_core::reference::{m1, m2, m3, m4};
use rapflow_core::stationary::{
    density_eval, interval_mass, stability_check, stationary_solve, stationary_solve_opts,
    total_mass,
};
use rapflow_core::Error;

/// Three-state chain, one up state feeding two symmetric down states;
/// stationary regime weights (0.2, 0.4, 0.4), mean drift -0.6.
fn three_state_mjp() -> RapFluidModel {
    let q = Matrix::from_row_slice(
        3,
        3,
        &[-2.0, 1.0, 1.0, 0.5, -1.0, 0.5, 0.5, 0.5, -1.0],
    );
    RapFluidModel::from_markov_jump(
        &q,
        &[Regime::Plus, Regime::Minus, Regime::Minus],
        &BlockStructure::singletons(1, 2, 0).unwrap(),
    )
    .unwrap()
}

#[test]
fn scalar_recurrent_closed_form() {
    let sol = stationary_solve(&m1()).unwrap();
    assert_abs_diff_eq!(sol.c_minus, 1.0 / 3.0, epsilon = 1e-10);
    assert_abs_diff_eq!(sol.v0[(0, 0)], 1.0, epsilon = 1e-10);
    assert!(sol.zero.is_none());
    assert!(sol.normalization_residual <= 1e-10);

    // pi(x) = (2/3) e^{-x}.
    for x in [0.5, 1.0, 2.0] {
        let point = density_eval(&sol, x).unwrap();
        assert_abs_diff_eq!(point.pi, (2.0 / 3.0) * (-x).exp(), epsilon = 1e-10);
        assert!(point.pi_zero.is_none());
        // Up and down densities balance when every excursion returns.
        assert_abs_diff_eq!(
            point.pi_plus.iter().sum::<f64>(),
            point.pi_minus.iter().sum::<f64>(),
            epsilon = 1e-12
        );
    }

    assert_abs_diff_eq!(sol.atom_minus()[(0, 0)], 1.0 / 3.0, epsilon = 1e-10);
    assert_abs_diff_eq!(
        interval_mass(&sol, 0.0, f64::INFINITY).unwrap(),
        2.0 / 3.0,
        epsilon = 1e-10
    );
    assert_abs_diff_eq!(total_mass(&sol).unwrap(), 1.0, epsilon = 1e-10);
}

#[test]
fn censored_boundary_model_closed_form() {
    let sol = stationary_solve(&m4()).unwrap();
    assert_abs_diff_eq!(sol.c_minus, 0.25, epsilon = 1e-10);

    // The down-switch into the zero regime carries no rate here, so the
    // zero-regime boundary vector is empty mass sitting on the atom.
    let zero = sol.zero.as_ref().expect("zero part retained");
    assert_abs_diff_eq!(zero.boundary.iter().sum::<f64>(), 0.0, epsilon = 1e-12);
    assert_abs_diff_eq!(sol.boundary_mass(), 0.25, epsilon = 1e-10);

    // Right limit at the boundary: 2 * c * v0 D-+ 1 + zero component.
    let at_zero = density_eval(&sol, 0.0).unwrap();
    assert_abs_diff_eq!(at_zero.pi, 0.75, epsilon = 1e-10);
    let pi_zero = at_zero.pi_zero.as_ref().expect("zero density present");
    assert_abs_diff_eq!(pi_zero[(0, 0)], 0.25, epsilon = 1e-10);

    // Same law as the uncensored scalar model: pi(x) = (3/4) e^{-x}.
    for x in [0.5, 1.0, 3.0] {
        let point = density_eval(&sol, x).unwrap();
        assert_abs_diff_eq!(point.pi, 0.75 * (-x).exp(), epsilon = 1e-10);
    }
    assert!(sol.normalization_residual <= 1e-10);
    assert_abs_diff_eq!(total_mass(&sol).unwrap(), 1.0, epsilon = 1e-10);
}

#[test]
fn transient_model_is_refused() {
    match stationary_solve(&m2()) {
        Err(Error::NotPositiveRecurrent { detail }) => {
            assert!(detail.contains("deficit"), "unexpected detail: {detail}");
        }
        other => panic!("expected not-positive-recurrent, got {other:?}"),
    }
}

#[test]
fn boundary_model_is_refused_on_either_path() {
    // Default budget: the sublinear fixed point does not converge.
    match stationary_solve(&m3()) {
        Err(Error::NotPositiveRecurrent { detail }) => {
            assert!(detail.contains("converge"), "unexpected detail: {detail}");
        }
        other => panic!("expected not-positive-recurrent, got {other:?}"),
    }
    // Converged long run: the crossing generator sits at zero, inside the
    // pinned margin.
    match stationary_solve_opts(&m3(), 1e-12, 5_000_000) {
        Err(Error::NotPositiveRecurrent { detail }) => {
            assert!(detail.contains("abscissa"), "unexpected detail: {detail}");
        }
        other => panic!("expected not-positive-recurrent, got {other:?}"),
    }
}

#[test]
fn stability_reports() {
    let (c1, p1) = psi_for_model(&m1(), 1e-12, 10_000).unwrap();
    let g1 = record_generators(&c1, &p1.psi).unwrap();
    let r1 = stability_check(&p1, &g1).unwrap();
    assert!(r1.positive_recurrent);
    assert!(r1.psi_row_sum_gap <= 1e-10);
    assert_abs_diff_eq!(r1.k_abscissa, -1.0, epsilon = 1e-9);
    assert_eq!(r1.u_zero_count, 1);

    let (c2, p2) = psi_for_model(&m2(), 1e-12, 10_000).unwrap();
    let g2 = record_generators(&c2, &p2.psi).unwrap();
    let r2 = stability_check(&p2, &g2).unwrap();
    assert!(!r2.positive_recurrent);
    assert_abs_diff_eq!(r2.psi_row_sum_gap, 0.5, epsilon = 1e-10);
    assert_eq!(r2.u_zero_count, 0);
}

#[test]
fn three_state_chain_mass_accounting() {
    let model = three_state_mjp();
    let sol = stationary_solve(&model).unwrap();
    assert!(sol.c_minus > 0.0 && sol.c_minus <= 1.0);
    assert!(sol.normalization_residual <= 1e-8);
    assert_abs_diff_eq!(total_mass(&sol).unwrap(), 1.0, epsilon = 1e-8);

    // Interval masses add up across a partition.
    let parts = interval_mass(&sol, 0.0, 0.7).unwrap()
        + interval_mass(&sol, 0.7, 2.3).unwrap()
        + interval_mass(&sol, 2.3, f64::INFINITY).unwrap();
    assert_abs_diff_eq!(
        parts,
        interval_mass(&sol, 0.0, f64::INFINITY).unwrap(),
        epsilon = 1e-12
    );

    // Positive density and up/down balance on a grid.
    for i in 1..=30 {
        let x = 0.25 * i as f64;
        let point = density_eval(&sol, x).unwrap();
        assert!(point.pi > 0.0);
        assert_abs_diff_eq!(
            point.pi_plus.iter().sum::<f64>(),
            point.pi_minus.iter().sum::<f64>(),
            epsilon = 1e-10
        );
    }
}

#[test]
fn density_decays_at_the_crossing_generator_rate() {
    for model in [m1(), three_state_mjp()] {
        let sol = stationary_solve(&model).unwrap();
        let rate = rapflow_core::linalg::spectral_abscissa(&sol.k).unwrap();
        // Least-squares slope of log pi over [1, 10].
        let xs: Vec<f64> = (0..=36).map(|i| 1.0 + 0.25 * i as f64).collect();
        let ys: Vec<f64> = xs
            .iter()
            .map(|&x| density_eval(&sol, x).unwrap().pi.ln())
            .collect();
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        let slope = sxy / sxx;
        assert!(
            (slope - rate).abs() <= 0.05 * rate.abs(),
            "slope {slope:.4} vs abscissa {rate:.4}"
        );
    }
}

#[test]
fn v0_is_invariant_under_time_rescaling() {
    let q = Matrix::from_row_slice(
        3,
        3,
        &[-2.0, 1.0, 1.0, 0.5, -1.0, 0.5, 0.5, 0.5, -1.0],
    );
    let blocks = BlockStructure::singletons(1, 2, 0).unwrap();
    let labels = [Regime::Plus, Regime::Minus, Regime::Minus];
    let slow = RapFluidModel::from_markov_jump(&q, &labels, &blocks).unwrap();
    let fast = RapFluidModel::from_markov_jump(&(3.0 * &q), &labels, &blocks).unwrap();
    let s = stationary_solve(&slow).unwrap();
    let f = stationary_solve(&fast).unwrap();
    for (a, b) in s.v0.iter().zip(f.v0.iter()) {
        assert_abs_diff_eq!(a, b, epsilon = 1e-10);
    }
    // The atom is dimensionless and survives the rescaling; the density
    // compresses toward the boundary: pi_fast(x) = 3 pi_slow(3x), because
    // the level still moves at unit slope against a 3x faster environment.
    assert_abs_diff_eq!(s.c_minus, f.c_minus, epsilon = 1e-10);
    let ps = density_eval(&s, 3.0 * 1.3).unwrap().pi;
    let pf = density_eval(&f, 1.3).unwrap().pi;
    assert_abs_diff_eq!(pf, 3.0 * ps, epsilon = 1e-10);
}

#[test]
fn density_eval_rejects_negative_height() {
    let sol = stationary_solve(&m1()).unwrap();
    assert!(matches!(
        density_eval(&sol, -0.1),
        Err(Error::InvalidArgument { .. })
    ));
    assert!(matches!(
        interval_mass(&sol, -1.0, 2.0),
        Err(Error::InvalidArgument { .. })
    ));
}

//! Acceptance gate. One test per criterion, each printing a single
//! `criterion N: PASS - ...` line and panicking with a FAIL detail
//! otherwise. Tolerances and runtime budgets are pinned below. Run
//!
//! ```text
//! cargo test -p rapflow-cli --test acceptance -- --nocapture --test-threads=1
//! ```
//!
//! to see the lines in order.

use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use rapflow_core::linalg::{expm, norm_inf, spectral_abscissa, sylvester_solve};
use rapflow_core::model::{censor_zero, BlockStructure, RapFluidModel, Regime};
use rapflow_core::passage::{
    level_hitting_prob, psi_for_model, psi_quadrature_oracle, psi_solve, psi_solve_traced,
    record_generators,
};
use rapflow_core::reference::{erlang2_me, m1, m2, m3, m4, markov_renewal_two_block};
use rapflow_core::sim::{
    default_horizon, estimate_first_return, estimate_stationary, path_rng, sample_holding_time,
    simulate_path, OrbitState,
};
use rapflow_core::stationary::{density_eval, stability_check, stationary_solve};
use rapflow_core::{Matrix, RowVector};

/// Closed-form agreement for the scalar models.
const TOL_CLOSED_FORM: f64 = 1e-10;
/// Entrywise agreement of the censored matrices with their target.
const TOL_CENSOR: f64 = 1e-12;
/// Iterate-for-iterate gap between the solver and the quadrature oracle.
const TOL_ORACLE: f64 = 1e-5;
/// Monte Carlo acceptance band in standard errors.
const SIGMA_BAND: f64 = 3.0;
/// Null-recurrent limit: tolerated distance of Psi and abscissa(K) from
/// their boundary values after a converged long run.
const TOL_BOUNDARY: f64 = 1e-5;

const BUDGET_1: Duration = Duration::from_secs(1);
const BUDGET_5: Duration = Duration::from_secs(30);
const BUDGET_6: Duration = Duration::from_secs(120);

fn plus_start(model: &RapFluidModel, alpha: &[f64]) -> OrbitState {
    OrbitState::from_full(model, Regime::Plus, RowVector::from_row_slice(alpha)).unwrap()
}

#[test]
fn criterion_1_scalar_recurrent_closed_forms() {
    let t0 = Instant::now();
    let model = m1();
    let c = censor_zero(&model).unwrap();
    let psi = psi_solve(
        &c.c_plus,
        &c.c_minus,
        &c.d_plus_minus,
        &c.d_minus_plus,
        1e-12,
        10_000,
    )
    .unwrap();
    let psi_gap = (psi.psi[(0, 0)] - 1.0).abs();
    assert!(
        psi.converged && psi_gap <= TOL_CLOSED_FORM,
        "criterion 1: FAIL - psi off by {psi_gap:.3e}"
    );

    let sol = stationary_solve(&model).unwrap();
    let c_gap = (sol.c_minus - 1.0 / 3.0).abs();
    assert!(
        c_gap <= TOL_CLOSED_FORM,
        "criterion 1: FAIL - c_minus off by {c_gap:.3e}"
    );
    let mut worst = 0.0f64;
    for x in [0.5, 1.0, 2.0] {
        let density = density_eval(&sol, x).unwrap().pi;
        worst = worst.max((density - (2.0 / 3.0) * (-x).exp()).abs());
    }
    assert!(
        worst <= TOL_CLOSED_FORM,
        "criterion 1: FAIL - density off by {worst:.3e}"
    );
    let elapsed = t0.elapsed();
    assert!(
        elapsed < BUDGET_1,
        "criterion 1: FAIL - runtime {elapsed:?} exceeds {BUDGET_1:?}"
    );
    println!(
        "criterion 1: PASS - psi gap {psi_gap:.1e}, c_minus gap {c_gap:.1e}, density gap {worst:.1e}, {} ms",
        elapsed.as_millis()
    );
}

#[test]
fn criterion_2_scalar_transient_closed_forms() {
    let model = m2();
    let (c, psi) = psi_for_model(&model, 1e-12, 10_000).unwrap();
    let psi_gap = (psi.psi[(0, 0)] - 0.5).abs();
    assert!(
        psi.converged && psi_gap <= TOL_CLOSED_FORM,
        "criterion 2: FAIL - psi off by {psi_gap:.3e}"
    );
    let gens = record_generators(&c, &psi.psi).unwrap();
    let alpha = RowVector::from_row_slice(&[1.0]);
    let hit = level_hitting_prob(&alpha, 1.0, &gens, &psi.psi).unwrap();
    let hit_gap = (hit - 0.5 * (-1.0f64).exp()).abs();
    assert!(
        hit_gap <= TOL_CLOSED_FORM,
        "criterion 2: FAIL - hitting probability off by {hit_gap:.3e}"
    );
    println!("criterion 2: PASS - psi gap {psi_gap:.1e}, hitting gap {hit_gap:.1e}");
}

#[test]
fn criterion_3_boundary_model_is_flagged() {
    let model = m3();
    let c = censor_zero(&model).unwrap();
    // The double root converges sublinearly; a long run gets within
    // O(step budget) of 1 and the stability gate must still refuse it.
    let psi = psi_solve(
        &c.c_plus,
        &c.c_minus,
        &c.d_plus_minus,
        &c.d_minus_plus,
        1e-12,
        2_000_000,
    )
    .unwrap();
    let psi_gap = (psi.psi[(0, 0)] - 1.0).abs();
    assert!(
        psi.converged && psi_gap <= TOL_BOUNDARY,
        "criterion 3: FAIL - psi off by {psi_gap:.3e}"
    );
    let gens = record_generators(&c, &psi.psi).unwrap();
    let report = stability_check(&psi, &gens).unwrap();
    assert!(
        report.k_abscissa.abs() <= TOL_BOUNDARY && !report.positive_recurrent,
        "criterion 3: FAIL - abscissa {:.3e} not flagged",
        report.k_abscissa
    );
    let err = match stationary_solve(&model) {
        Err(e) => format!("{e}"),
        Ok(_) => String::from("no error"),
    };
    assert!(
        err.contains("not-positive-recurrent"),
        "criterion 3: FAIL - stationary solve said: {err}"
    );
    println!(
        "criterion 3: PASS - psi gap {psi_gap:.1e}, abscissa(K) {:.1e} flagged, solver refused",
        report.k_abscissa
    );
}

#[test]
fn criterion_4_censoring_matches_the_two_regime_model() {
    let censored = censor_zero(&m4()).unwrap();
    let target = censor_zero(&m1()).unwrap();
    let worst = [
        norm_inf(&(&censored.c_plus - &target.c_plus)),
        norm_inf(&(&censored.c_minus - &target.c_minus)),
        norm_inf(&(&censored.d_plus_minus - &target.d_plus_minus)),
        norm_inf(&(&censored.d_minus_plus - &target.d_minus_plus)),
    ]
    .into_iter()
    .fold(0.0f64, f64::max);
    assert!(
        worst <= TOL_CENSOR,
        "criterion 4: FAIL - censored matrices differ by {worst:.3e}"
    );

    let (_, psi) = psi_for_model(&m4(), 1e-12, 10_000).unwrap();
    let psi_gap = (psi.psi[(0, 0)] - 1.0).abs();
    assert!(
        psi.censored && psi_gap <= TOL_CLOSED_FORM,
        "criterion 4: FAIL - censored psi off by {psi_gap:.3e}"
    );

    let sol = stationary_solve(&m4()).unwrap();
    let c_gap = (sol.c_minus - 0.25).abs();
    assert!(
        c_gap <= TOL_CLOSED_FORM,
        "criterion 4: FAIL - c_minus off by {c_gap:.3e}"
    );
    let boundary_zero: f64 = sol
        .zero
        .as_ref()
        .map(|z| z.boundary.iter().sum())
        .unwrap_or(f64::NAN);
    assert!(
        boundary_zero.is_finite(),
        "criterion 4: FAIL - zero regime part missing"
    );
    println!(
        "criterion 4: PASS - matrices within {worst:.1e}, c_minus gap {c_gap:.1e}, \
         zero boundary mass {boundary_zero:.3e}, normalization residual {:.3e}",
        sol.normalization_residual
    );
}

#[test]
fn criterion_5_solver_agrees_with_the_quadrature_oracle() {
    let t0 = Instant::now();
    let models: [(&str, RapFluidModel); 4] = [
        ("m1", m1()),
        ("m2", m2()),
        ("erlang2", erlang2_me()),
        ("markov-renewal", markov_renewal_two_block()),
    ];
    let mut summary = Vec::new();
    for (name, model) in &models {
        let c = censor_zero(model).unwrap();
        // Same iterate on both paths: 200 steps, no early stop.
        let solver = psi_solve(
            &c.c_plus,
            &c.c_minus,
            &c.d_plus_minus,
            &c.d_minus_plus,
            0.0,
            200,
        )
        .unwrap();
        let oracle = psi_quadrature_oracle(
            &c.c_plus,
            &c.c_minus,
            &c.d_plus_minus,
            &c.d_minus_plus,
            200,
            4000,
        )
        .unwrap();
        let gap = norm_inf(&(&solver.psi - &oracle));
        assert!(
            gap <= TOL_ORACLE,
            "criterion 5: FAIL - {name} solver/oracle gap {gap:.3e}"
        );
        summary.push(format!("{name} {gap:.1e}"));
    }
    let elapsed = t0.elapsed();
    assert!(
        elapsed < BUDGET_5,
        "criterion 5: FAIL - runtime {elapsed:?} exceeds {BUDGET_5:?}"
    );
    println!(
        "criterion 5: PASS - gaps {}, {} ms",
        summary.join(", "),
        elapsed.as_millis()
    );
}

#[test]
fn criterion_6_monte_carlo_matches_the_analytics() {
    let t0 = Instant::now();

    let transient = m2();
    let start = plus_start(&transient, &[1.0]);
    let horizon = default_horizon(&transient).unwrap();
    let est = estimate_first_return(&transient, &start, 100_000, horizon, 1003).unwrap();
    let z_return = (est.probability.mean - 0.5).abs() / est.probability.stderr;
    assert!(
        z_return <= SIGMA_BAND,
        "criterion 6: FAIL - first return z = {z_return:.2} (est {} +- {})",
        est.probability.mean,
        est.probability.stderr
    );

    let recurrent = m1();
    let start = plus_start(&recurrent, &[1.0]);
    let edges = [0.5, 1.0, 2.0];
    let est = estimate_stationary(&recurrent, &start, 1_000_000.0, 10_000.0, &edges, 2004).unwrap();
    let mut zs = vec![(est.atom_minus.mean - 1.0 / 3.0).abs() / est.atom_minus.stderr];
    let mut lo = 0.0f64;
    for (bin, hi) in est.bins.iter().zip(edges) {
        let mass = (2.0 / 3.0) * ((-lo).exp() - (-hi).exp());
        zs.push((bin.mean - mass).abs() / bin.stderr);
        lo = hi;
    }
    let worst_z = zs.iter().copied().fold(0.0f64, f64::max);
    assert!(
        worst_z <= SIGMA_BAND,
        "criterion 6: FAIL - stationary z scores {zs:?}"
    );

    let elapsed = t0.elapsed();
    assert!(
        elapsed < BUDGET_6,
        "criterion 6: FAIL - runtime {elapsed:?} exceeds {BUDGET_6:?}"
    );
    println!(
        "criterion 6: PASS - return z {z_return:.2}, stationary max z {worst_z:.2} \
         (atom + 3 bins), {} ms",
        elapsed.as_millis()
    );
}

#[test]
fn criterion_7_invariant_suite() {
    // Semigroup law of the exponential.
    let a = Matrix::from_row_slice(3, 3, &[-2.0, 1.5, 0.5, 0.3, -1.0, 0.2, 0.8, 0.1, -1.4]);
    let whole = expm(&a, 1.6).unwrap();
    let split = expm(&a, 0.7).unwrap() * expm(&a, 0.9).unwrap();
    let semigroup = norm_inf(&(&whole - &split)) / norm_inf(&whole).max(1.0);
    assert!(
        semigroup <= 1e-12,
        "criterion 7: FAIL - semigroup gap {semigroup:.3e}"
    );

    // Sylvester residual on a fixed well-posed pair.
    let b = Matrix::from_row_slice(2, 2, &[-3.0, 0.4, 0.6, -2.0]);
    let q = Matrix::from_row_slice(3, 2, &[1.0, -0.5, 0.25, 2.0, -1.0, 0.75]);
    let x = sylvester_solve(&a, &b, &q).unwrap();
    let sylvester = norm_inf(&(&a * &x + &x * &b - &q));
    assert!(
        sylvester <= 1e-12,
        "criterion 7: FAIL - Sylvester residual {sylvester:.3e}"
    );

    // Iterates increase entrywise toward the minimal solution on a chain
    // model (one up state feeding two down states).
    let q = Matrix::from_row_slice(3, 3, &[-2.0, 1.0, 1.0, 1.5, -1.5, 0.0, 0.5, 0.0, -0.5]);
    let mjp = RapFluidModel::from_markov_jump(
        &q,
        &[Regime::Plus, Regime::Minus, Regime::Minus],
        &BlockStructure::singletons(1, 2, 0).unwrap(),
    )
    .unwrap();
    let c = censor_zero(&mjp).unwrap();
    let (_, trace) = psi_solve_traced(
        &c.c_plus,
        &c.c_minus,
        &c.d_plus_minus,
        &c.d_minus_plus,
        1e-12,
        10_000,
    )
    .unwrap();
    let mut monotone_slack = 0.0f64;
    for pair in trace.windows(2) {
        for (late, early) in pair[1].iter().zip(pair[0].iter()) {
            monotone_slack = monotone_slack.max(early - late);
        }
    }
    assert!(
        monotone_slack <= 1e-13,
        "criterion 7: FAIL - iterate decreased by {monotone_slack:.3e}"
    );

    // U has zero row sums whenever Psi is stochastic.
    for model in [m1(), m4()] {
        let (c, psi) = psi_for_model(&model, 1e-12, 10_000).unwrap();
        let gens = record_generators(&c, &psi.psi).unwrap();
        for r in 0..gens.u.nrows() {
            let row_sum: f64 = gens.u.row(r).iter().sum();
            assert!(
                row_sum.abs() <= 1e-10,
                "criterion 7: FAIL - U row {r} sums to {row_sum:.3e}"
            );
        }
    }

    // Orbit normalization and block confinement along a long path.
    let model = markov_renewal_two_block();
    let start = plus_start(&model, &[1.0, 0.0, 0.0]);
    let record = simulate_path(&model, &start, 24_000.0, false, 31, &[]).unwrap();
    assert!(
        record.jumps >= 10_000,
        "criterion 7: FAIL - only {} jump events",
        record.jumps
    );
    for event in &record.events {
        let s = &event.state;
        let total: f64 = s.a.iter().sum();
        assert!(
            (total - 1.0).abs() <= 1e-10,
            "criterion 7: FAIL - orbit sum {total} at t={}",
            event.time
        );
        let range = model.structure().range(s.regime, s.block);
        for (i, v) in s.a.iter().enumerate() {
            assert!(
                range.contains(&i) || v.abs() <= 1e-12,
                "criterion 7: FAIL - orbit leaked {v:.3e} outside its block"
            );
        }
    }

    // Holding times from a single exponential phase against the exact CDF.
    let expo = m1();
    let state = plus_start(&expo, &[1.0]);
    let mut rng = path_rng(57, 0);
    let n = 100_000usize;
    let mut draws: Vec<f64> = (0..n)
        .map(|_| sample_holding_time(&state, &mut rng, &expo).unwrap())
        .collect();
    draws.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let mut ks = 0.0f64;
    for (i, h) in draws.iter().enumerate() {
        let cdf = 1.0 - (-2.0 * h).exp();
        ks = ks
            .max((cdf - i as f64 / n as f64).abs())
            .max(((i + 1) as f64 / n as f64 - cdf).abs());
    }
    let ks_crit = 1.62762 / (n as f64).sqrt();
    assert!(
        ks <= ks_crit,
        "criterion 7: FAIL - KS statistic {ks:.4e} above {ks_crit:.4e}"
    );

    // The generators fed to the semigroup law above must be genuinely
    // stable, or the checks test nothing.
    assert!(spectral_abscissa(&a).unwrap() < 0.0);
    assert!(spectral_abscissa(&b).unwrap() < 0.0);

    println!(
        "criterion 7: PASS - semigroup {semigroup:.1e}, Sylvester {sylvester:.1e}, \
         {} monotone iterates, U rows zero, {} orbit events clean, KS {ks:.3e} < {ks_crit:.3e}",
        trace.len(),
        record.events.len()
    );
}

#[test]
fn criterion_8_compare_is_byte_deterministic() {
    let mut fixture = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    fixture.push("tests/fixtures/m2.json");
    let run = |threads: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_rapflow"));
        cmd.args([
            "compare",
            "--model",
            fixture.to_str().unwrap(),
            "--target",
            "return",
            "--paths",
            "5000",
            "--horizon",
            "60",
            "--seed",
            "17",
        ]);
        match threads {
            Some(n) => cmd.env("RAPFLOW_THREADS", n),
            None => cmd.env_remove("RAPFLOW_THREADS"),
        };
        let out = cmd.output().expect("binary runs");
        assert!(
            out.status.success(),
            "criterion 8: FAIL - compare exited with {:?}",
            out.status.code()
        );
        out.stdout
    };
    let first = run(None);
    let second = run(None);
    assert!(
        first == second,
        "criterion 8: FAIL - repeat run changed bytes"
    );
    let one = run(Some("1"));
    let four = run(Some("4"));
    assert!(
        first == one && one == four,
        "criterion 8: FAIL - worker count changed bytes"
    );
    println!(
        "criterion 8: PASS - {} report bytes identical across two runs and 1 vs 4 workers",
        first.len()
    );
}

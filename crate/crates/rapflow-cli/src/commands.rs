//! Command dispatch: each subcommand loads the model, runs the matching
//! core operation, and fills a report. Anything random requires the
//! explicit seed carried by the flags.

use crate::model_file::{parse_model, LoadedModel};
use crate::report::{Report, Value};
use crate::{CliError, Command, Common, SimArgs, Target};
use rapflow_core::model::{CensoredModel, RapFluidModel, Regime};
use rapflow_core::passage::{
    crossing_expectations, downward_record, first_return, level_hitting_prob, psi_for_model,
    record_generators, PsiSolution, RecordGenerators,
};
use rapflow_core::sim::{
    default_horizon, estimate_first_return, estimate_level_hitting, estimate_stationary,
    OrbitState, PassageEstimate, StationaryEstimate,
};
use rapflow_core::stationary::{interval_mass, stationary_solve, StationarySolution};
use rapflow_core::{tol, RowVector};

pub fn run(command: &Command, echo: &str) -> Result<Report, CliError> {
    match command {
        Command::Validate { common } => validate(common, echo),
        Command::Psi {
            common,
            tol,
            max_iter,
        } => psi(common, echo, *tol, *max_iter),
        Command::FirstReturn { common, alpha } => first_return_cmd(common, echo, alpha.as_deref()),
        Command::Record { common, x, alpha } => record(common, echo, *x, alpha.as_deref()),
        Command::Hitting { common, x, alpha } => hitting(common, echo, *x, alpha.as_deref()),
        Command::Crossings { common, x, alpha } => crossings(common, echo, *x, alpha.as_deref()),
        Command::Stationary { common, grid } => stationary(common, echo, grid.as_deref()),
        Command::Simulate { common, sim } => simulate(common, echo, sim),
        Command::Compare { common, sim } => compare(common, echo, sim),
    }
}

fn load(common: &Common) -> Result<LoadedModel, CliError> {
    parse_model(&common.model)
}

fn parse_float_list(text: &str, what: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|piece| {
            piece.trim().parse::<f64>().map_err(|_| {
                CliError::Input(format!("cannot parse {what} entry {piece:?} as a number"))
            })
        })
        .collect()
}

/// Starting orbit in the up regime: the flag wins, then the file's alpha.
fn resolve_alpha(
    loaded: &LoadedModel,
    flag: Option<&str>,
) -> Result<RowVector, CliError> {
    let alpha = match flag {
        Some(text) => RowVector::from_row_slice(&parse_float_list(text, "--alpha")?),
        None => loaded.alpha.clone().ok_or_else(|| {
            CliError::Input(
                "no starting orbit: pass --alpha or add an \"alpha\" field to the model file"
                    .into(),
            )
        })?,
    };
    if alpha.ncols() != loaded.model.eta(Regime::Plus) {
        return Err(CliError::Input(format!(
            "alpha has {} entries, the up regime has {}",
            alpha.ncols(),
            loaded.model.eta(Regime::Plus)
        )));
    }
    Ok(alpha)
}

/// Censored view, converged first-return matrix, and both record
/// generators; an unconverged fixed point is a numerical failure for
/// every analytic command built on it.
fn passage_parts(
    model: &RapFluidModel,
) -> Result<(CensoredModel, PsiSolution, RecordGenerators), CliError> {
    let (censored, psi) = psi_for_model(model, tol::PSI_STEP, tol::PSI_MAX_ITER)?;
    if !psi.converged {
        return Err(CliError::Numerical(format!(
            "first-return fixed point did not converge after {} iterations (residual {:.3e})",
            psi.iterations, psi.residual
        )));
    }
    let gens = record_generators(&censored, &psi.psi)?;
    Ok((censored, psi, gens))
}

fn validate(common: &Common, echo: &str) -> Result<Report, CliError> {
    let loaded = load(common)?;
    let model = &loaded.model;
    let mut report = Report::new(echo.into(), loaded.fingerprint.clone());
    report
        .result("valid", Value::Bool(true))
        .result("eta_plus", Value::Int(model.eta(Regime::Plus) as i64))
        .result("eta_minus", Value::Int(model.eta(Regime::Minus) as i64))
        .result("eta_zero", Value::Int(model.eta(Regime::Zero) as i64))
        .result(
            "n_blocks_plus",
            Value::Int(model.structure().n_blocks(Regime::Plus) as i64),
        )
        .result(
            "n_blocks_minus",
            Value::Int(model.structure().n_blocks(Regime::Minus) as i64),
        )
        .result(
            "n_blocks_zero",
            Value::Int(model.structure().n_blocks(Regime::Zero) as i64),
        )
        .result("has_zero", Value::Bool(model.has_zero()));
    Ok(report)
}

/// Default step tolerance for the `psi` command, tighter than the library
/// default: the stopping rule bounds the final residual by ten times the
/// step tolerance, and the report promises residuals at the 1e-12 level.
const PSI_CMD_STEP: f64 = 1e-13;

fn psi(
    common: &Common,
    echo: &str,
    tol_flag: Option<f64>,
    max_iter: Option<usize>,
) -> Result<Report, CliError> {
    let loaded = load(common)?;
    let tol_used = tol_flag.unwrap_or(PSI_CMD_STEP);
    let iter_cap = max_iter.unwrap_or(tol::PSI_MAX_ITER);
    let (_, sol) = psi_for_model(&loaded.model, tol_used, iter_cap)?;
    let mut report = Report::new(echo.into(), loaded.fingerprint.clone());
    report
        .result("psi", Value::matrix(&sol.psi))
        .result("iterations", Value::Int(sol.iterations as i64))
        .result("residual", Value::Scalar(sol.residual))
        .result("converged", Value::Bool(sol.converged))
        .result("censored", Value::Bool(sol.censored));
    report
        .diagnostic("tol", Value::Scalar(tol_used))
        .diagnostic("max_iter", Value::Int(iter_cap as i64));
    if !sol.converged {
        report.failure = Some(format!(
            "first-return fixed point did not converge after {} iterations (residual {:.3e})",
            sol.iterations, sol.residual
        ));
    }
    Ok(report)
}

fn first_return_cmd(
    common: &Common,
    echo: &str,
    alpha_flag: Option<&str>,
) -> Result<Report, CliError> {
    let loaded = load(common)?;
    let alpha = resolve_alpha(&loaded, alpha_flag)?;
    let (_, psi, _) = passage_parts(&loaded.model)?;
    let ret = first_return(&alpha, &psi.psi)?;
    let mut report = Report::new(echo.into(), loaded.fingerprint.clone());
    report
        .result("return_vector", Value::vector(&ret.vector))
        .result("return_probability", Value::Scalar(ret.probability))
        .result("in_range", Value::Bool(ret.in_range));
    psi_diagnostics(&mut report, &psi);
    Ok(report)
}

fn record(
    common: &Common,
    echo: &str,
    x: f64,
    alpha_flag: Option<&str>,
) -> Result<Report, CliError> {
    let loaded = load(common)?;
    let alpha = resolve_alpha(&loaded, alpha_flag)?;
    let (_, psi, gens) = passage_parts(&loaded.model)?;
    let orbit = downward_record(&alpha, true, x, &gens, &psi.psi)?;
    let mut report = Report::new(echo.into(), loaded.fingerprint.clone());
    report
        .result("record_vector", Value::vector(&orbit))
        .result("record_mass", Value::Scalar(orbit.iter().sum()))
        .result("x", Value::Scalar(x));
    psi_diagnostics(&mut report, &psi);
    Ok(report)
}

fn hitting(
    common: &Common,
    echo: &str,
    x: f64,
    alpha_flag: Option<&str>,
) -> Result<Report, CliError> {
    let loaded = load(common)?;
    let alpha = resolve_alpha(&loaded, alpha_flag)?;
    let (_, psi, gens) = passage_parts(&loaded.model)?;
    let prob = level_hitting_prob(&alpha, x, &gens, &psi.psi)?;
    let mut report = Report::new(echo.into(), loaded.fingerprint.clone());
    report
        .result("hitting_probability", Value::Scalar(prob))
        .result("x", Value::Scalar(x));
    psi_diagnostics(&mut report, &psi);
    Ok(report)
}

fn crossings(
    common: &Common,
    echo: &str,
    x: f64,
    alpha_flag: Option<&str>,
) -> Result<Report, CliError> {
    let loaded = load(common)?;
    let alpha = resolve_alpha(&loaded, alpha_flag)?;
    let (_, psi, gens) = passage_parts(&loaded.model)?;
    let (up, down) = crossing_expectations(&alpha, x, &gens, &psi.psi)?;
    let mut report = Report::new(echo.into(), loaded.fingerprint.clone());
    report
        .result("up_vector", Value::vector(&up))
        .result("up_mass", Value::Scalar(up.iter().sum()))
        .result("down_vector", Value::vector(&down))
        .result("down_mass", Value::Scalar(down.iter().sum()))
        .result("x", Value::Scalar(x));
    psi_diagnostics(&mut report, &psi);
    Ok(report)
}

fn psi_diagnostics(report: &mut Report, psi: &PsiSolution) {
    report
        .diagnostic("psi_iterations", Value::Int(psi.iterations as i64))
        .diagnostic("psi_residual", Value::Scalar(psi.residual));
}

/// Bin edges for histogram-style reporting: strictly increasing positives.
fn parse_grid(text: Option<&str>, default: &[f64]) -> Result<Vec<f64>, CliError> {
    let edges = match text {
        Some(t) => parse_float_list(t, "--grid")?,
        None => default.to_vec(),
    };
    if edges.is_empty() {
        return Err(CliError::Input("--grid needs at least one edge".into()));
    }
    Ok(edges)
}

fn grid_echo(edges: &[f64]) -> String {
    edges
        .iter()
        .map(|e| format!("{e}"))
        .collect::<Vec<_>>()
        .join(",")
}

fn stationary(common: &Common, echo: &str, grid: Option<&str>) -> Result<Report, CliError> {
    let loaded = load(common)?;
    let sol = stationary_solve(&loaded.model)?;
    let mut report = Report::new(echo.into(), loaded.fingerprint.clone());
    report
        .result("c_minus", Value::Scalar(sol.c_minus))
        .result("boundary_mass", Value::Scalar(sol.boundary_mass()))
        .result(
            "normalization_residual",
            Value::Scalar(sol.normalization_residual),
        )
        .result("v0", Value::vector(&sol.v0))
        .result("atom_minus", Value::vector(&sol.atom_minus()));
    if let Some(zero) = &sol.zero {
        report
            .result("z0_boundary", Value::vector(&zero.boundary))
            .result("z0_boundary_mass", Value::Scalar(zero.boundary.iter().sum()));
    }
    if grid.is_some() {
        let edges = parse_grid(grid, &[])?;
        push_analytic_bins(&mut report, &sol, &edges, "")?;
        report.diagnostic("grid", Value::Text(grid_echo(&edges)));
    }
    report
        .diagnostic("k_abscissa", Value::Scalar(sol.stability.k_abscissa))
        .diagnostic(
            "psi_row_sum_gap",
            Value::Scalar(sol.stability.psi_row_sum_gap),
        )
        .diagnostic("u_zero_count", Value::Int(sol.stability.u_zero_count as i64));
    Ok(report)
}

/// Interval masses of the analytic density over the grid, named `bin_i`
/// (suffix distinguishes analytic rows in `compare` reports).
fn push_analytic_bins(
    report: &mut Report,
    sol: &StationarySolution,
    edges: &[f64],
    suffix: &str,
) -> Result<(), CliError> {
    let mut prev = 0.0;
    for (i, edge) in edges.iter().enumerate() {
        report.result(
            &format!("bin_{i}{suffix}"),
            Value::Scalar(interval_mass(sol, prev, *edge)?),
        );
        prev = *edge;
    }
    report.result(
        &format!("tail{suffix}"),
        Value::Scalar(interval_mass(sol, prev, f64::INFINITY)?),
    );
    Ok(())
}

fn start_state(loaded: &LoadedModel, alpha_flag: Option<&str>) -> Result<OrbitState, CliError> {
    let alpha = resolve_alpha(loaded, alpha_flag)?;
    Ok(OrbitState::from_full(&loaded.model, Regime::Plus, alpha)?)
}

struct SimPlan {
    paths: u64,
    horizon: f64,
    total_time: f64,
    burn_in: f64,
    edges: Vec<f64>,
}

fn sim_plan(model: &RapFluidModel, sim: &SimArgs) -> Result<SimPlan, CliError> {
    let horizon = match sim.horizon {
        Some(h) => h,
        None => default_horizon(model)?,
    };
    let total_time = sim.total_time.unwrap_or(100_000.0);
    Ok(SimPlan {
        paths: sim.paths.unwrap_or(10_000),
        horizon,
        total_time,
        burn_in: sim.burn_in.unwrap_or(total_time / 100.0),
        edges: parse_grid(sim.grid.as_deref(), &[0.5, 1.0, 2.0, 4.0])?,
    })
}

fn require_x(sim: &SimArgs) -> Result<f64, CliError> {
    sim.x
        .ok_or_else(|| CliError::Input("target \"hitting\" needs --x".into()))
}

fn push_passage_estimate(report: &mut Report, name: &str, est: &PassageEstimate, sim: &SimArgs) {
    report
        .result_with_stderr(name, est.probability.mean, est.probability.stderr)
        .result("orbit_mean", Value::vector(&est.orbit_mean))
        .result("orbit_stderr", Value::vector(&est.orbit_stderr));
    report
        .diagnostic("paths", Value::Int(est.probability.n_samples as i64))
        .diagnostic("truncated", Value::Int(est.truncated as i64))
        .diagnostic("horizon", Value::Scalar(est.horizon))
        .diagnostic("seed", Value::Int(sim.seed as i64));
    warn_truncation(report, est);
}

fn warn_truncation(report: &mut Report, est: &PassageEstimate) {
    if est.horizon <= 0.0 {
        report.warn("horizon is not positive: no path can resolve, the estimate is zero".into());
    } else if est.truncated > 0 {
        report.warn(format!(
            "{} of {} paths hit the horizon unresolved; the estimate is biased low",
            est.truncated, est.probability.n_samples
        ));
    }
}

fn push_stationary_estimate(
    report: &mut Report,
    est: &StationaryEstimate,
    plan: &SimPlan,
    sim: &SimArgs,
) {
    report.result_with_stderr("atom_minus", est.atom_minus.mean, est.atom_minus.stderr);
    if let Some(z) = &est.atom_zero {
        report.result_with_stderr("atom_zero", z.mean, z.stderr);
    }
    for (i, bin) in est.bins.iter().enumerate() {
        report.result_with_stderr(&format!("bin_{i}"), bin.mean, bin.stderr);
    }
    report.result_with_stderr("tail", est.tail.mean, est.tail.stderr);
    report
        .diagnostic("events", Value::Int(est.events as i64))
        .diagnostic("n_batches", Value::Int(est.n_batches as i64))
        .diagnostic("total_time", Value::Scalar(plan.total_time))
        .diagnostic("burn_in", Value::Scalar(plan.burn_in))
        .diagnostic("grid", Value::Text(grid_echo(&est.edges)))
        .diagnostic("seed", Value::Int(sim.seed as i64));
}

fn simulate(common: &Common, echo: &str, sim: &SimArgs) -> Result<Report, CliError> {
    let loaded = load(common)?;
    let start = start_state(&loaded, sim.alpha.as_deref())?;
    let plan = sim_plan(&loaded.model, sim)?;
    let mut report = Report::new(echo.into(), loaded.fingerprint.clone());
    match sim.target {
        Target::Return => {
            let est =
                estimate_first_return(&loaded.model, &start, plan.paths, plan.horizon, sim.seed)?;
            push_passage_estimate(&mut report, "return_probability", &est, sim);
        }
        Target::Hitting => {
            let x = require_x(sim)?;
            let est = estimate_level_hitting(
                &loaded.model,
                &start,
                x,
                plan.paths,
                plan.horizon,
                sim.seed,
            )?;
            push_passage_estimate(&mut report, "hitting_probability", &est, sim);
            report.result("x", Value::Scalar(x));
        }
        Target::Stationary => {
            let est = estimate_stationary(
                &loaded.model,
                &start,
                plan.total_time,
                plan.burn_in,
                &plan.edges,
                sim.seed,
            )?;
            push_stationary_estimate(&mut report, &est, &plan, sim);
        }
    }
    Ok(report)
}

/// Standardized gap between estimate and analytic value. A zero standard
/// error only matches an exact agreement.
fn z_score(estimate: f64, analytic: f64, stderr: f64) -> f64 {
    let gap = estimate - analytic;
    if stderr > 0.0 {
        gap / stderr
    } else if gap == 0.0 {
        0.0
    } else {
        f64::INFINITY * gap.signum()
    }
}

fn compare(common: &Common, echo: &str, sim: &SimArgs) -> Result<Report, CliError> {
    let loaded = load(common)?;
    let start = start_state(&loaded, sim.alpha.as_deref())?;
    let plan = sim_plan(&loaded.model, sim)?;
    let mut report = Report::new(echo.into(), loaded.fingerprint.clone());
    let mut max_abs_z = 0.0f64;
    let mut track = |z: f64| -> f64 {
        max_abs_z = max_abs_z.max(z.abs());
        z
    };

    match sim.target {
        Target::Return => {
            let alpha = resolve_alpha(&loaded, sim.alpha.as_deref())?;
            let (_, psi, _) = passage_parts(&loaded.model)?;
            let analytic = first_return(&alpha, &psi.psi)?.probability;
            let est =
                estimate_first_return(&loaded.model, &start, plan.paths, plan.horizon, sim.seed)?;
            report.result("analytic", Value::Scalar(analytic));
            report.result_with_stderr("estimate", est.probability.mean, est.probability.stderr);
            report.result(
                "z",
                Value::Scalar(track(z_score(
                    est.probability.mean,
                    analytic,
                    est.probability.stderr,
                ))),
            );
            report
                .diagnostic("paths", Value::Int(est.probability.n_samples as i64))
                .diagnostic("truncated", Value::Int(est.truncated as i64))
                .diagnostic("horizon", Value::Scalar(est.horizon));
            warn_truncation(&mut report, &est);
        }
        Target::Hitting => {
            let x = require_x(sim)?;
            let alpha = resolve_alpha(&loaded, sim.alpha.as_deref())?;
            let (_, psi, gens) = passage_parts(&loaded.model)?;
            let analytic = level_hitting_prob(&alpha, x, &gens, &psi.psi)?;
            let est = estimate_level_hitting(
                &loaded.model,
                &start,
                x,
                plan.paths,
                plan.horizon,
                sim.seed,
            )?;
            report.result("analytic", Value::Scalar(analytic));
            report.result_with_stderr("estimate", est.probability.mean, est.probability.stderr);
            report.result(
                "z",
                Value::Scalar(track(z_score(
                    est.probability.mean,
                    analytic,
                    est.probability.stderr,
                ))),
            );
            report.result("x", Value::Scalar(x));
            report
                .diagnostic("paths", Value::Int(est.probability.n_samples as i64))
                .diagnostic("truncated", Value::Int(est.truncated as i64))
                .diagnostic("horizon", Value::Scalar(est.horizon));
            warn_truncation(&mut report, &est);
        }
        Target::Stationary => {
            let sol = stationary_solve(&loaded.model)?;
            let est = estimate_stationary(
                &loaded.model,
                &start,
                plan.total_time,
                plan.burn_in,
                &plan.edges,
                sim.seed,
            )?;
            let atom = sol.atom_minus().iter().sum::<f64>();
            report.result("atom_minus_analytic", Value::Scalar(atom));
            report.result_with_stderr(
                "atom_minus_estimate",
                est.atom_minus.mean,
                est.atom_minus.stderr,
            );
            report.result(
                "atom_minus_z",
                Value::Scalar(track(z_score(
                    est.atom_minus.mean,
                    atom,
                    est.atom_minus.stderr,
                ))),
            );
            if let Some(z_est) = &est.atom_zero {
                let z_atom = sol
                    .zero
                    .as_ref()
                    .map(|z| z.boundary.iter().sum::<f64>())
                    .unwrap_or(0.0);
                report.result("atom_zero_analytic", Value::Scalar(z_atom));
                report.result_with_stderr("atom_zero_estimate", z_est.mean, z_est.stderr);
                report.result(
                    "atom_zero_z",
                    Value::Scalar(track(z_score(z_est.mean, z_atom, z_est.stderr))),
                );
            }
            let mut prev = 0.0;
            for (i, edge) in plan.edges.iter().enumerate() {
                let analytic = interval_mass(&sol, prev, *edge)?;
                let bin = &est.bins[i];
                report.result(&format!("bin_{i}_analytic"), Value::Scalar(analytic));
                report.result_with_stderr(&format!("bin_{i}_estimate"), bin.mean, bin.stderr);
                report.result(
                    &format!("bin_{i}_z"),
                    Value::Scalar(track(z_score(bin.mean, analytic, bin.stderr))),
                );
                prev = *edge;
            }
            let tail_analytic = interval_mass(&sol, prev, f64::INFINITY)?;
            report.result("tail_analytic", Value::Scalar(tail_analytic));
            report.result_with_stderr("tail_estimate", est.tail.mean, est.tail.stderr);
            report.result(
                "tail_z",
                Value::Scalar(track(z_score(est.tail.mean, tail_analytic, est.tail.stderr))),
            );
            report
                .diagnostic("events", Value::Int(est.events as i64))
                .diagnostic("n_batches", Value::Int(est.n_batches as i64))
                .diagnostic("total_time", Value::Scalar(plan.total_time))
                .diagnostic("burn_in", Value::Scalar(plan.burn_in))
                .diagnostic("grid", Value::Text(grid_echo(&est.edges)));
        }
    }
    report.result("max_abs_z", Value::Scalar(max_abs_z));
    report.diagnostic("seed", Value::Int(sim.seed as i64));
    Ok(report)
}

//! First-passage quantities: the return matrix `Psi`, the generators of the
//! downward-record and up-crossing semigroups built from it, and the
//! within-regime exit laws that need no fixed point at all.

use crate::linalg::{expm, norm_inf, spectral_abscissa, FactoredSylvester, Matrix, RowVector};
use crate::model::{censor_zero, CensoredModel, RapFluidModel, Regime};
use crate::{tol, Error, Result};

/// Minimal nonnegative solution of
/// `C+ Psi + Psi C- + D+- + Psi D-+ Psi = 0` with diagnostics.
///
/// On `converged == true` the defining residual is below `10 * tol` in the
/// max-row-sum norm and, for probabilistic inputs, `Psi` is entrywise
/// nonnegative with row sums at most one.
#[derive(Debug, Clone)]
pub struct PsiSolution {
    pub psi: Matrix,
    pub iterations: usize,
    /// `|C+ Psi + Psi C- + D+- + Psi D-+ Psi|_inf` at the final iterate.
    pub residual: f64,
    pub converged: bool,
    /// True when the input was a zero-censored view of a three-regime model.
    pub censored: bool,
}

/// Iterates `C+ P' + P' C- = -(D+- + P D-+ P)` from `P = 0`. Successive
/// iterates increase entrywise toward the minimal solution, so stopping on
/// (step <= tol AND residual <= 10*tol) selects that solution.
///
/// Returns `converged == false` (not an error) when `max_iter` runs out;
/// diverging iterates (norm above 1e6) are an error, since the minimal
/// solution of a well-posed system is substochastic.
pub fn psi_solve(
    c_plus: &Matrix,
    c_minus: &Matrix,
    d_plus_minus: &Matrix,
    d_minus_plus: &Matrix,
    tol: f64,
    max_iter: usize,
) -> Result<PsiSolution> {
    let (sol, _) = psi_iterate(
        c_plus,
        c_minus,
        d_plus_minus,
        d_minus_plus,
        tol,
        max_iter,
        false,
    )?;
    Ok(sol)
}

/// As [`psi_solve`] with default tolerance `1e-12` and iteration cap 10000.
pub fn psi_solve_default(
    c_plus: &Matrix,
    c_minus: &Matrix,
    d_plus_minus: &Matrix,
    d_minus_plus: &Matrix,
) -> Result<PsiSolution> {
    psi_solve(
        c_plus,
        c_minus,
        d_plus_minus,
        d_minus_plus,
        tol::PSI_STEP,
        tol::PSI_MAX_ITER,
    )
}

/// As [`psi_solve`], additionally returning every iterate `P_0 = 0, P_1, ...`
/// up to and including the final one. Test hook for the monotonicity and
/// matched-iteration checks.
pub fn psi_solve_traced(
    c_plus: &Matrix,
    c_minus: &Matrix,
    d_plus_minus: &Matrix,
    d_minus_plus: &Matrix,
    tol: f64,
    max_iter: usize,
) -> Result<(PsiSolution, Vec<Matrix>)> {
    psi_iterate(
        c_plus,
        c_minus,
        d_plus_minus,
        d_minus_plus,
        tol,
        max_iter,
        true,
    )
}

/// Censors the zero regime if present, then solves for `Psi` on the
/// two-regime view. Single entry point for model-level callers.
pub fn psi_for_model(
    model: &RapFluidModel,
    tol: f64,
    max_iter: usize,
) -> Result<(CensoredModel, PsiSolution)> {
    let censored = censor_zero(model)?;
    let mut sol = psi_solve(
        &censored.c_plus,
        &censored.c_minus,
        &censored.d_plus_minus,
        &censored.d_minus_plus,
        tol,
        max_iter,
    )?;
    sol.censored = censored.censored;
    Ok((censored, sol))
}

fn psi_iterate(
    c_plus: &Matrix,
    c_minus: &Matrix,
    d_plus_minus: &Matrix,
    d_minus_plus: &Matrix,
    tol: f64,
    max_iter: usize,
    trace: bool,
) -> Result<(PsiSolution, Vec<Matrix>)> {
    check_two_regime_dims(c_plus, c_minus, d_plus_minus, d_minus_plus)?;
    if !tol.is_finite() || tol < 0.0 {
        return Err(Error::InvalidArgument {
            what: format!("psi tolerance must be finite and >= 0, got {tol}"),
        });
    }
    for (m, name) in [(c_plus, "C+"), (c_minus, "C-")] {
        if spectral_abscissa(m)? >= 0.0 {
            return Err(Error::UnstableBlock {
                detail: format!("{name} must have strictly negative spectral abscissa"),
            });
        }
    }

    let ep = c_plus.nrows();
    let em = c_minus.nrows();
    // The left-hand operator is fixed across iterations; factor it once.
    let system = FactoredSylvester::new(c_plus.clone(), c_minus.clone())?;
    let residual_of = |p: &Matrix| -> f64 {
        norm_inf(&(c_plus * p + p * c_minus + d_plus_minus + p * d_minus_plus * p))
    };

    let mut psi = Matrix::zeros(ep, em);
    let mut iterates = if trace { vec![psi.clone()] } else { Vec::new() };
    for iteration in 1..=max_iter {
        let rhs = -(d_plus_minus + &psi * d_minus_plus * &psi);
        let next = system.solve(&rhs)?;
        let step = norm_inf(&(&next - &psi));
        psi = next;
        if trace {
            iterates.push(psi.clone());
        }
        let norm = norm_inf(&psi);
        if !norm.is_finite() || norm > tol::PSI_DIVERGENCE_NORM {
            return Err(Error::PsiDiverged {
                iterations: iteration,
                norm,
            });
        }
        if step <= tol {
            let residual = residual_of(&psi);
            if residual <= 10.0 * tol {
                return Ok((
                    PsiSolution {
                        psi,
                        iterations: iteration,
                        residual,
                        converged: true,
                        censored: false,
                    },
                    iterates,
                ));
            }
        }
    }
    let residual = residual_of(&psi);
    Ok((
        PsiSolution {
            psi,
            iterations: max_iter,
            residual,
            converged: false,
            censored: false,
        },
        iterates,
    ))
}

/// Independent check of the iteration: the same sequence written as
/// `P_n = integral_0^T e^{C+ y} (D+- + P_{n-1} D-+ P_{n-1}) e^{C- y} dy`
/// and computed by composite Simpson quadrature with `2 * quad_steps`
/// panels on `[0, T]`, `T = 40 / |max spectral abscissa|`. Agrees with the
/// solver's `n_iters`-th iterate up to quadrature error.
pub fn psi_quadrature_oracle(
    c_plus: &Matrix,
    c_minus: &Matrix,
    d_plus_minus: &Matrix,
    d_minus_plus: &Matrix,
    n_iters: usize,
    quad_steps: usize,
) -> Result<Matrix> {
    check_two_regime_dims(c_plus, c_minus, d_plus_minus, d_minus_plus)?;
    if quad_steps == 0 {
        return Err(Error::InvalidArgument {
            what: "quad_steps must be positive".into(),
        });
    }
    let a_plus = spectral_abscissa(c_plus)?;
    let a_minus = spectral_abscissa(c_minus)?;
    if a_plus >= 0.0 || a_minus >= 0.0 {
        return Err(Error::UnstableBlock {
            detail: "quadrature oracle requires strictly negative spectral abscissae".into(),
        });
    }
    // The integrand decays like e^{(a_plus + a_minus) y}; truncating where the
    // slower factor alone has decayed through e^{-40} is far below 1e-12.
    let horizon = 40.0 / a_plus.max(a_minus).abs();
    let nodes = 2 * quad_steps + 1;
    let h = horizon / (nodes - 1) as f64;

    let step_plus = expm(c_plus, h)?;
    let step_minus = expm(c_minus, h)?;
    let mut left = Vec::with_capacity(nodes);
    let mut right = Vec::with_capacity(nodes);
    left.push(Matrix::identity(c_plus.nrows(), c_plus.nrows()));
    right.push(Matrix::identity(c_minus.nrows(), c_minus.nrows()));
    for i in 1..nodes {
        left.push(&left[i - 1] * &step_plus);
        right.push(&right[i - 1] * &step_minus);
    }

    let weight = |i: usize| -> f64 {
        if i == 0 || i == nodes - 1 {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        }
    };

    let mut psi = Matrix::zeros(c_plus.nrows(), c_minus.nrows());
    for _ in 0..n_iters {
        let inner = d_plus_minus + &psi * d_minus_plus * &psi;
        let mut next = Matrix::zeros(c_plus.nrows(), c_minus.nrows());
        for i in 0..nodes {
            next += weight(i) * &left[i] * &inner * &right[i];
        }
        psi = next * (h / 3.0);
    }
    Ok(psi)
}

/// Generators of the two semigroups a converged `Psi` induces:
/// `U = C- + D-+ Psi` drives the downward record between upward excursions,
/// `K = C+ + Psi D-+` drives the running-maximum crossings.
#[derive(Debug, Clone)]
pub struct RecordGenerators {
    pub u: Matrix,
    pub k: Matrix,
}

pub fn record_generators(censored: &CensoredModel, psi: &Matrix) -> Result<RecordGenerators> {
    check_psi_dims(censored, psi)?;
    Ok(RecordGenerators {
        u: &censored.c_minus + &censored.d_minus_plus * psi,
        k: &censored.c_plus + psi * &censored.d_minus_plus,
    })
}

/// First return to the starting level from below: orbit `alpha Psi`, total
/// probability its sum. `in_range` flags the sum lying in `[0, 1]` up to
/// 1e-9 slack; outside that the fixed point is untrustworthy.
#[derive(Debug, Clone)]
pub struct FirstReturn {
    pub vector: RowVector,
    pub probability: f64,
    pub in_range: bool,
}

pub fn first_return(alpha: &RowVector, psi: &Matrix) -> Result<FirstReturn> {
    if alpha.ncols() != psi.nrows() {
        return Err(Error::Dimension {
            what: format!(
                "start vector has {} entries, Psi has {} rows",
                alpha.ncols(),
                psi.nrows()
            ),
        });
    }
    let sum: f64 = alpha.iter().sum();
    if (sum - 1.0).abs() > 1e-12 {
        return Err(Error::NotNormalized { sum });
    }
    let vector = alpha * psi;
    let probability: f64 = vector.iter().sum();
    let in_range = (-1e-9..=1.0 + 1e-9).contains(&probability);
    Ok(FirstReturn {
        vector,
        probability,
        in_range,
    })
}

/// Orbit at the first visit to level `current - x`, the downward record
/// process. From the up-moving regime the start is carried through `Psi`
/// first; from the down-moving regime it evolves directly: `start Psi e^{Ux}`
/// or `start e^{Ux}`.
pub fn downward_record(
    start: &RowVector,
    from_plus: bool,
    x: f64,
    gens: &RecordGenerators,
    psi: &Matrix,
) -> Result<RowVector> {
    if !x.is_finite() || x < 0.0 {
        return Err(Error::InvalidArgument {
            what: format!("record depth must be finite and >= 0, got {x}"),
        });
    }
    let at_minus = if from_plus {
        if start.ncols() != psi.nrows() {
            return Err(Error::Dimension {
                what: format!(
                    "up-regime start has {} entries, Psi has {} rows",
                    start.ncols(),
                    psi.nrows()
                ),
            });
        }
        start * psi
    } else {
        if start.ncols() != gens.u.nrows() {
            return Err(Error::Dimension {
                what: format!(
                    "down-regime start has {} entries, U is {}x{}",
                    start.ncols(),
                    gens.u.nrows(),
                    gens.u.ncols()
                ),
            });
        }
        start.clone()
    };
    Ok(&at_minus * expm(&gens.u, x)?)
}

/// Probability of ever reaching level `start_level - x` when started upward:
/// `alpha Psi e^{Ux} 1`.
pub fn level_hitting_prob(
    alpha: &RowVector,
    x: f64,
    gens: &RecordGenerators,
    psi: &Matrix,
) -> Result<f64> {
    let orbit = downward_record(alpha, true, x, gens, psi)?;
    Ok(orbit.iter().sum())
}

/// Expected crossing orbits of level `start_level + x` before returning to
/// the start: upward `alpha e^{Kx}`, downward that times `Psi`.
pub fn crossing_expectations(
    alpha: &RowVector,
    x: f64,
    gens: &RecordGenerators,
    psi: &Matrix,
) -> Result<(RowVector, RowVector)> {
    if !x.is_finite() || x < 0.0 {
        return Err(Error::InvalidArgument {
            what: format!("crossing level must be finite and >= 0, got {x}"),
        });
    }
    if alpha.ncols() != gens.k.nrows() {
        return Err(Error::Dimension {
            what: format!(
                "start vector has {} entries, K is {}x{}",
                alpha.ncols(),
                gens.k.nrows(),
                gens.k.ncols()
            ),
        });
    }
    let up = alpha * expm(&gens.k, x)?;
    let down = &up * psi;
    Ok((up, down))
}

/// Law of the switch out of one regime into a given other regime, on the
/// raw (uncensored) model: defective density over landing states
/// `alpha e^{C^k t} D^{kl}`, total mass the landing probability.
#[derive(Debug, Clone)]
pub struct ExitLaw {
    alpha: RowVector,
    c: Matrix,
    d_to_target: Matrix,
}

impl ExitLaw {
    /// Density vector over the target regime's states at `t >= 0`.
    pub fn density_at(&self, t: f64) -> Result<RowVector> {
        if !t.is_finite() || t < 0.0 {
            return Err(Error::InvalidArgument {
                what: format!("exit-law time must be finite and >= 0, got {t}"),
            });
        }
        Ok(&self.alpha * expm(&self.c, t)? * &self.d_to_target)
    }

    /// Mean landing vector `alpha (-C^k)^{-1} D^{kl}`; its sum is the
    /// probability that the first switch lands in the target regime.
    pub fn mean(&self) -> Result<RowVector> {
        let inv = (-&self.c).try_inverse().ok_or(Error::UnstableBlock {
            detail: "within-regime dynamics not invertible".into(),
        })?;
        Ok(&self.alpha * inv * &self.d_to_target)
    }

    /// Sum of the mean landing vector.
    pub fn landing_probability(&self) -> Result<f64> {
        Ok(self.mean()?.iter().sum())
    }
}

pub fn exit_law(
    alpha: &RowVector,
    from: Regime,
    to: Regime,
    model: &RapFluidModel,
) -> Result<ExitLaw> {
    if from == to {
        return Err(Error::InvalidArgument {
            what: "exit law needs two distinct regimes".into(),
        });
    }
    let c = model.c(from).ok_or(Error::InvalidArgument {
        what: format!("model has no {from} regime"),
    })?;
    let d = model.d(from, to).ok_or(Error::InvalidArgument {
        what: format!("model has no switches {from} -> {to}"),
    })?;
    if alpha.ncols() != c.nrows() {
        return Err(Error::Dimension {
            what: format!(
                "start vector has {} entries, regime {from} has {}",
                alpha.ncols(),
                c.nrows()
            ),
        });
    }
    Ok(ExitLaw {
        alpha: alpha.clone(),
        c: c.clone(),
        d_to_target: d.clone(),
    })
}

/// Sub-probability orbit of still being in regime `k` at elapsed time `t`:
/// `alpha e^{C^k t}`.
pub fn confined_mean(
    alpha: &RowVector,
    k: Regime,
    t: f64,
    model: &RapFluidModel,
) -> Result<RowVector> {
    if !t.is_finite() || t < 0.0 {
        return Err(Error::InvalidArgument {
            what: format!("confinement time must be finite and >= 0, got {t}"),
        });
    }
    let c = model.c(k).ok_or(Error::InvalidArgument {
        what: format!("model has no {k} regime"),
    })?;
    if alpha.ncols() != c.nrows() {
        return Err(Error::Dimension {
            what: format!(
                "start vector has {} entries, regime {k} has {}",
                alpha.ncols(),
                c.nrows()
            ),
        });
    }
    Ok(alpha * expm(c, t)?)
}

fn check_two_regime_dims(
    c_plus: &Matrix,
    c_minus: &Matrix,
    d_plus_minus: &Matrix,
    d_minus_plus: &Matrix,
) -> Result<()> {
    for m in [c_plus, c_minus] {
        if m.nrows() != m.ncols() {
            return Err(Error::NonSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
    }
    let ep = c_plus.nrows();
    let em = c_minus.nrows();
    if ep == 0 || em == 0 {
        return Err(Error::Dimension {
            what: "both regimes must be nonempty".into(),
        });
    }
    if d_plus_minus.nrows() != ep || d_plus_minus.ncols() != em {
        return Err(Error::Dimension {
            what: format!(
                "D+- must be {}x{}, got {}x{}",
                ep,
                em,
                d_plus_minus.nrows(),
                d_plus_minus.ncols()
            ),
        });
    }
    if d_minus_plus.nrows() != em || d_minus_plus.ncols() != ep {
        return Err(Error::Dimension {
            what: format!(
                "D-+ must be {}x{}, got {}x{}",
                em,
                ep,
                d_minus_plus.nrows(),
                d_minus_plus.ncols()
            ),
        });
    }
    Ok(())
}

fn check_psi_dims(censored: &CensoredModel, psi: &Matrix) -> Result<()> {
    if psi.nrows() != censored.eta_plus() || psi.ncols() != censored.eta_minus() {
        return Err(Error::Dimension {
            what: format!(
                "Psi must be {}x{}, got {}x{}",
                censored.eta_plus(),
                censored.eta_minus(),
                psi.nrows(),
                psi.ncols()
            ),
        });
    }
    Ok(())
}

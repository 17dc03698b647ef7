//! Stationary distribution of the regulated level: boundary atoms at zero,
//! the exponential-form density components above it, and the stability
//! check that guards both.

use crate::linalg::{
    eigen_count_near_zero, expm, left_null_vector, norm_inf, ones, spectral_abscissa, ColVector,
    Matrix, RowVector,
};
use crate::model::RapFluidModel;
use crate::passage::{psi_for_model, record_generators, PsiSolution, RecordGenerators};
use crate::{tol, Error, Result};

/// Numerical reading of the positive-recurrence conditions. Reports only;
/// the solver turns a failed report into an error.
#[derive(Debug, Clone)]
pub struct StabilityReport {
    pub psi_converged: bool,
    /// `|Psi 1 - 1|_inf`; zero means every upward excursion returns.
    pub psi_row_sum_gap: f64,
    /// Must be strictly negative for an integrable density.
    pub k_abscissa: f64,
    /// Eigenvalues of `U` in the zero box; exactly one is required.
    pub u_zero_count: usize,
    pub positive_recurrent: bool,
}

impl StabilityReport {
    /// One-line reason for a negative verdict.
    pub fn failure_detail(&self) -> String {
        if !self.psi_converged {
            "first-return fixed point did not converge".into()
        } else if self.psi_row_sum_gap > tol::RECURRENCE_GAP {
            format!(
                "return probability deficit {:.3e} exceeds {:.1e}",
                self.psi_row_sum_gap,
                tol::RECURRENCE_GAP
            )
        } else if self.k_abscissa > -tol::K_ABSCISSA_MARGIN {
            format!(
                "crossing generator abscissa {:.3e} is not below -{:.1e}",
                self.k_abscissa,
                tol::K_ABSCISSA_MARGIN
            )
        } else if self.u_zero_count != 1 {
            format!(
                "record generator has {} eigenvalues at zero, need exactly 1",
                self.u_zero_count
            )
        } else {
            "stable".into()
        }
    }
}

/// Width of the zero-eigenvalue box for `U`. In the recurrent case `U`
/// itself is a cancellation (its zero eigenvalue carries the fixed-point
/// error), so the scale comes from `U` and `K` jointly; `K` is an honest
/// nonzero operator exactly when `U` degenerates, and vice versa.
fn u_zero_box(gens: &RecordGenerators) -> f64 {
    tol::V0_EIG_SCALE * norm_inf(&gens.u).max(norm_inf(&gens.k)).max(f64::MIN_POSITIVE)
}

/// Evaluates the recurrence conditions: `Psi 1 = 1` (within the pinned
/// gap), `abscissa(K)` strictly negative (within the pinned margin), and a
/// simple zero eigenvalue of `U`.
pub fn stability_check(psi: &PsiSolution, gens: &RecordGenerators) -> Result<StabilityReport> {
    let row_gap = (&psi.psi * ones(psi.psi.ncols()))
        .iter()
        .map(|s| (s - 1.0).abs())
        .fold(0.0, f64::max);
    let k_abscissa = spectral_abscissa(&gens.k)?;
    let u_zero_count = eigen_count_near_zero(&gens.u, u_zero_box(gens))?;
    let positive_recurrent = psi.converged
        && row_gap <= tol::RECURRENCE_GAP
        && k_abscissa <= -tol::K_ABSCISSA_MARGIN
        && u_zero_count == 1;
    Ok(StabilityReport {
        psi_converged: psi.converged,
        psi_row_sum_gap: row_gap,
        k_abscissa,
        u_zero_count,
        positive_recurrent,
    })
}

/// Zero-regime furniture of a stationary solution.
#[derive(Debug, Clone)]
pub struct StationaryZeroPart {
    /// `[D+0 + Psi D-0] (-C0)^{-1}`: maps the up-regime density row into
    /// the zero-regime density row.
    pub into_zero: Matrix,
    /// Boundary vector at level zero over zero-regime states,
    /// `c v0 D-0 (-C0)^{-1}`. Its mass sits on top of the atom `c`.
    pub boundary: RowVector,
}

/// Stationary law of the regulated level: atom(s) at zero plus matrix
/// exponential density above.
///
/// Mass accounting: `c_minus + boundary zero mass + integral of the
/// density` should be one; the gap is `normalization_residual`, reported
/// and never folded back in.
#[derive(Debug, Clone)]
pub struct StationarySolution {
    /// Orbit at level zero approached from above, `v0 U = 0`, `v0 1 = 1`.
    pub v0: RowVector,
    /// Mass of the atom at level zero in the down regime.
    pub c_minus: f64,
    pub k: Matrix,
    pub psi: Matrix,
    /// `c_minus v0 D-+`: the row every density component multiplies.
    pub front: RowVector,
    pub zero: Option<StationaryZeroPart>,
    pub stability: StabilityReport,
    pub normalization_residual: f64,
}

/// Density components at height `x`, understood as the right limit at
/// `x = 0`.
#[derive(Debug, Clone)]
pub struct DensityPoint {
    pub pi_plus: RowVector,
    pub pi_minus: RowVector,
    pub pi_zero: Option<RowVector>,
    /// Total density, sum of all component masses.
    pub pi: f64,
}

impl StationarySolution {
    /// Atom vector at level zero over down-regime states.
    pub fn atom_minus(&self) -> RowVector {
        self.c_minus * &self.v0
    }

    /// Total boundary mass: the down-regime atom plus any zero-regime
    /// boundary vector mass.
    pub fn boundary_mass(&self) -> f64 {
        self.c_minus + self.zero.as_ref().map_or(0.0, |z| z.boundary.iter().sum())
    }

    /// Column vector `1 + Psi 1 + into_zero 1`: total density at height x
    /// is `front e^{Kx}` times this.
    fn density_tail(&self) -> ColVector {
        let mut tail = ones(self.k.nrows()) + &self.psi * ones(self.psi.ncols());
        if let Some(z) = &self.zero {
            tail += &z.into_zero * ones(z.into_zero.ncols());
        }
        tail
    }
}

/// Solves for the stationary law with the default fixed-point budget.
pub fn stationary_solve(model: &RapFluidModel) -> Result<StationarySolution> {
    stationary_solve_opts(model, tol::PSI_STEP, tol::PSI_MAX_ITER)
}

/// As [`stationary_solve`] with an explicit fixed-point tolerance and
/// iteration cap (boundary-adjacent models converge sublinearly and may
/// need millions of iterations to pass the stability gate).
pub fn stationary_solve_opts(
    model: &RapFluidModel,
    psi_tol: f64,
    max_iter: usize,
) -> Result<StationarySolution> {
    let (censored, psi) = psi_for_model(model, psi_tol, max_iter)?;
    let gens = record_generators(&censored, &psi.psi)?;
    let stability = stability_check(&psi, &gens)?;
    if !stability.positive_recurrent {
        return Err(Error::NotPositiveRecurrent {
            detail: stability.failure_detail(),
        });
    }

    let v0 = left_null_vector(&gens.u, u_zero_box(&gens))?;

    let k_inv = gens.k.clone().try_inverse().ok_or_else(|| Error::NotPositiveRecurrent {
        detail: "crossing generator is singular".into(),
    })?;

    // Expected time drained through K per unit of boundary time, doubled
    // because every up-crossing is matched by a down-crossing; the zero
    // regime adds its sojourn on top.
    let weights: ColVector = match &censored.zero {
        None => 2.0 * ones(censored.eta_plus()),
        Some(z) => {
            let through = (&z.d_plus_zero + &psi.psi * &z.d_minus_zero) * &z.neg_c0_inv;
            2.0 * ones(censored.eta_plus()) + through * ones(z.neg_c0_inv.ncols())
        }
    };
    let denominator = 1.0 - (&v0 * &censored.d_minus_plus * &k_inv * weights)[(0, 0)];
    if !denominator.is_finite() || denominator <= 0.0 {
        return Err(Error::NotPositiveRecurrent {
            detail: format!("boundary-time normalizer {denominator:.3e} is not positive"),
        });
    }
    let c_minus = 1.0 / denominator;
    if c_minus > 1.0 + 1e-9 {
        return Err(Error::NotPositiveRecurrent {
            detail: format!("boundary atom {c_minus:.6} exceeds one"),
        });
    }

    let front = c_minus * &v0 * &censored.d_minus_plus;
    let zero = match &censored.zero {
        None => None,
        Some(z) => Some(StationaryZeroPart {
            into_zero: (&z.d_plus_zero + &psi.psi * &z.d_minus_zero) * &z.neg_c0_inv,
            boundary: c_minus * &v0 * &z.d_minus_zero * &z.neg_c0_inv,
        }),
    };

    let mut solution = StationarySolution {
        v0,
        c_minus,
        k: gens.k,
        psi: psi.psi,
        front,
        zero,
        stability,
        normalization_residual: 0.0,
    };
    // integral_0^inf front e^{Kx} tail dx = -front K^{-1} tail.
    let density_mass = (-(&solution.front * &k_inv) * solution.density_tail())[(0, 0)];
    solution.normalization_residual = (solution.boundary_mass() + density_mass - 1.0).abs();
    Ok(solution)
}

/// Density components at `x >= 0` (right limit at zero):
/// `Pi+ = front e^{Kx}`, `Pi- = Pi+ Psi`, `Pi0 = Pi+ into_zero`.
pub fn density_eval(sol: &StationarySolution, x: f64) -> Result<DensityPoint> {
    if !x.is_finite() || x < 0.0 {
        return Err(Error::InvalidArgument {
            what: format!("density height must be finite and >= 0, got {x}"),
        });
    }
    let pi_plus = &sol.front * expm(&sol.k, x)?;
    let pi_minus = &pi_plus * &sol.psi;
    let pi_zero = sol.zero.as_ref().map(|z| &pi_plus * &z.into_zero);
    let mut pi: f64 = pi_plus.iter().sum::<f64>() + pi_minus.iter().sum::<f64>();
    if let Some(z) = &pi_zero {
        pi += z.iter().sum::<f64>();
    }
    Ok(DensityPoint {
        pi_plus,
        pi_minus,
        pi_zero,
        pi,
    })
}

/// `integral_a^b pi(x) dx` in closed form; `b` may be infinite.
pub fn interval_mass(sol: &StationarySolution, a: f64, b: f64) -> Result<f64> {
    if !a.is_finite() || a < 0.0 || b < a {
        return Err(Error::InvalidArgument {
            what: format!("interval must satisfy 0 <= a <= b, got [{a}, {b}]"),
        });
    }
    let k_inv = sol.k.clone().try_inverse().ok_or_else(|| Error::NotPositiveRecurrent {
        detail: "crossing generator is singular".into(),
    })?;
    let at_a = &sol.front * expm(&sol.k, a)?;
    let at_b = if b.is_infinite() {
        RowVector::zeros(sol.front.ncols())
    } else {
        &sol.front * expm(&sol.k, b)?
    };
    Ok(((at_b - at_a) * k_inv * sol.density_tail())[(0, 0)])
}

/// Boundary mass plus the full density integral; one up to the reported
/// normalization residual.
pub fn total_mass(sol: &StationarySolution) -> Result<f64> {
    Ok(sol.boundary_mass() + interval_mass(sol, 0.0, f64::INFINITY)?)
}

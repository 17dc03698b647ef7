//! Pinned numeric tolerances.
//!
//! Each constant is a contract, not a tuning knob: tests and acceptance
//! checks reference these by name, and callers that need something looser
//! pass an explicit override where the API allows one.

/// Target relative accuracy of the matrix exponential on well-conditioned
/// inputs.
pub const EXPM_RELATIVE: f64 = 1e-12;

/// Sylvester solve: `|AX + XB - Q|_inf <= SYLVESTER_RESIDUAL * max(1, |Q|_inf)`.
pub const SYLVESTER_RESIDUAL: f64 = 1e-10;

/// Accuracy of the spectral abscissa (QR iteration on the real Schur form).
pub const EIGEN_ACCURACY: f64 = 1e-9;

/// Row-sum condition on model matrices: `C^k 1 + sum_l D^{kl} 1 = 0`.
pub const ROW_SUM_RESIDUAL: f64 = 1e-10;

/// Slack allowed below zero for jump intensities along validation flows.
pub const INTENSITY_SLACK: f64 = 1e-9;

/// Censored matrices must reproduce their defining arithmetic to this.
pub const CENSOR_ARITHMETIC: f64 = 1e-12;

/// Default stop for the first-return iteration: step size and (x10) the
/// defining-equation residual.
pub const PSI_STEP: f64 = 1e-12;

/// Default iteration budget for the first-return fixed point. Enough for
/// every linearly convergent model; boundary (null-recurrent) models need
/// millions of iterations and an explicit override.
pub const PSI_MAX_ITER: usize = 10_000;

/// Iterate norm beyond which the first-return iteration is declared divergent.
pub const PSI_DIVERGENCE_NORM: f64 = 1e6;

/// Relative zero-eigenvalue window for extracting the boundary vector v0
/// from the downward-record generator: `|Re lambda| < V0_EIG_SCALE * |U|_inf`.
pub const V0_EIG_SCALE: f64 = 1e-7;

/// `|Psi 1 - 1|_inf` at or below this counts as a recurrent first-return
/// matrix for the stability verdict. The iteration floor for boundary
/// models sits near 1e-6, so this cannot be tightened past ~1e-5.
pub const RECURRENCE_GAP: f64 = 1e-5;

/// The crossing generator must have spectral abscissa below minus this to
/// count as positive recurrent (same floor as RECURRENCE_GAP).
pub const K_ABSCISSA_MARGIN: f64 = 1e-5;

/// Orbit renormalization residual allowed after a flow step or jump.
pub const ORBIT_NORMALIZATION: f64 = 1e-10;

/// Coordinates outside the active block must stay within this of zero.
pub const BLOCK_CONFINEMENT: f64 = 1e-12;

/// Survival inversion solves `S(h) = u` to this absolute accuracy.
pub const SURVIVAL_INVERSION: f64 = 1e-12;

/// Hard cap on a single holding time; exceeding it is an error.
pub const HOLDING_TIME_CAP: f64 = 1e6;

use thiserror::Error;

/// Every failure mode of the solver and simulator.
///
/// The short slug at the start of each message is stable and is what the
/// CLI matches on for exit codes: validation problems (bad inputs, bad
/// dimensions, bad parameters) versus numerical problems (singularities,
/// non-convergence, degenerate trajectories).
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("non-square: matrix is {rows}x{cols}")]
    NonSquare { rows: usize, cols: usize },

    #[error("non-finite: {what}")]
    NonFinite { what: String },

    #[error("dimension-mismatch: {what}")]
    Dimension { what: String },

    #[error("invalid-argument: {what}")]
    InvalidArgument { what: String },

    #[error("sylvester-singular: {detail}")]
    SylvesterSingular { detail: String },

    #[error("eigen-no-converge: QR iteration did not converge")]
    EigenNoConverge,

    #[error("eigenzero-violation: {detail}")]
    EigenzeroViolation { detail: String },

    #[error("psi-diverged: iterate norm {norm:.3e} after {iterations} iterations")]
    PsiDiverged { iterations: usize, norm: f64 },

    #[error("not-positive-recurrent: {detail}")]
    NotPositiveRecurrent { detail: String },

    #[error("singular C0: zero-regime dynamics are not invertible")]
    SingularCZero,

    #[error("not-a-generator: {detail}")]
    NotAGenerator { detail: String },

    #[error("not-stochastic: {detail}")]
    NotStochastic { detail: String },

    #[error("not-normalized: vector sums to {sum} instead of 1")]
    NotNormalized { sum: f64 },

    #[error("unstable-block: {detail}")]
    UnstableBlock { detail: String },

    #[error("general-rates: {detail}")]
    GeneralRates { detail: String },

    #[error("invalid-intensity: {detail}")]
    InvalidIntensity { detail: String },

    #[error("holding-time-overflow: survival stayed above target out to t={cap:.1e}")]
    HoldingTimeOverflow { cap: f64 },

    #[error("orbit-degenerate: {detail}")]
    OrbitDegenerate { detail: String },
}

impl Error {
    /// True for errors that mean the *inputs* were unacceptable, as opposed
    /// to a computation that failed numerically.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::NonSquare { .. }
                | Error::NonFinite { .. }
                | Error::Dimension { .. }
                | Error::InvalidArgument { .. }
                | Error::NotAGenerator { .. }
                | Error::NotStochastic { .. }
                | Error::NotNormalized { .. }
                | Error::UnstableBlock { .. }
                | Error::GeneralRates { .. }
        )
    }
}

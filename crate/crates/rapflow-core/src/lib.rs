//! Matrix-analytic solver and exact-law PDMP simulator for RAP-modulated
//! fluid queues.
//!
//! A model is a family of blocks `C^k` (within-regime dynamics) and `D^{kl}`
//! (regime switches) driving an orbit process: a normalized row vector `A_t`
//! that flows as `A e^{Gamma t} / (A e^{Gamma t} 1)` between jumps and jumps
//! with intensity `-A Gamma 1`. The level moves at slope +1, -1, or 0 per
//! regime; the queue is the level regulated at zero.
//!
//! Everything analytic funnels through a handful of kernels:
//!
//! * [`passage::psi_solve`] computes the first-return matrix as the minimal
//!   solution of a quadratic Sylvester fixed point,
//! * [`passage::record_generators`] builds the downward-record generator
//!   `U = C- + D-+ Psi` and the crossing generator `K = C+ + Psi D-+`,
//! * [`stationary::stationary_solve`] assembles boundary atoms and the
//!   matrix-exponential density of the stationary queue,
//! * [`sim`] simulates the same process exactly (no time discretization)
//!   and estimates every analytic target independently.
//!
//! Critical invariants:
//! * orbit vectors satisfy `a . 1 = 1` after every flow step and jump;
//! * models with a zero-slope regime are censored into an equivalent
//!   two-regime system before any half-line computation;
//! * all randomness is seeded; identical seeds give identical results
//!   regardless of thread count.

pub mod error;
pub mod linalg;
pub mod model;
pub mod passage;
pub mod reference;
pub mod sim;
pub mod stationary;
pub mod tol;

pub use error::Error;
pub use linalg::{ColVector, Matrix, RowVector};

pub type Result<T> = std::result::Result<T, Error>;

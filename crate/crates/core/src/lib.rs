//! Probabilistic robustness analysis for discrete-time stochastic jump
//! linear systems.
//!
//! A jump linear system `x(k+1) = A_j x(k)` switches at random among a
//! finite family of linear maps. Started from a Gaussian state, the state
//! distribution becomes a Gaussian mixture whose component count grows
//! exponentially in time. This crate quantifies how that distribution
//! approaches the Dirac reference at the origin — the order-2 Wasserstein
//! distance `W(k)` — in three ways:
//!
//! * exact mixture enumeration (the oracle, exponential cost),
//! * a split-and-merge recursion that moment-matches the mixture back to
//!   one synthetic Gaussian each step and preserves `W(k)` exactly at
//!   constant cost,
//! * a mode-conditional recursion that is exact under the true Markov
//!   chain path law,
//!
//! plus seeded Monte Carlo sampling to validate `W^2(k) = E|x(k)|^2`.
//!
//! All numeric code is generic over the [`Scalar`] precision; the aliases
//! at the crate root fix the default `f64` instantiation used by the CLI
//! and the shipped fixtures.

pub mod error;
pub mod gaussian;
pub mod linalg;
pub mod montecarlo;
pub mod propagation;
pub mod scalar;
pub mod system;

pub use error::{Error, Result};
pub use scalar::Scalar;
pub use system::LawMode;

/// Default-precision matrix.
pub type Matrix = linalg::Matrix<f64>;
/// Default-precision Gaussian.
pub type Gaussian = gaussian::Gaussian<f64>;
/// Default-precision Gaussian mixture.
pub type GaussianMixture = gaussian::GaussianMixture<f64>;
/// Default-precision jump linear system.
pub type JumpLinearSystem = system::JumpLinearSystem<f64>;
/// Default-precision switching law.
pub type SwitchingLaw = system::SwitchingLaw<f64>;
/// Default-precision mode path.
pub type ModePath = system::ModePath;
/// Default-precision Wasserstein trace.
pub type WassersteinTrace = propagation::WassersteinTrace<f64>;
/// Default-precision mode-conditional recursion state.
pub type ModeConditionalState = propagation::ModeConditionalState<f64>;
/// Default-precision empirical moments.
pub type EmpiricalMoments = montecarlo::EmpiricalMoments<f64>;

/// Single-precision variants for callers that trade accuracy for memory.
pub type Matrix32 = linalg::Matrix<f32>;
pub type Gaussian32 = gaussian::Gaussian<f32>;
pub type GaussianMixture32 = gaussian::GaussianMixture<f32>;
pub type JumpLinearSystem32 = system::JumpLinearSystem<f32>;
pub type SwitchingLaw32 = system::SwitchingLaw<f32>;

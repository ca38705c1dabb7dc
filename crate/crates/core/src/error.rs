//! Error type shared by the whole crate.

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Everything that can go wrong while building or running an analysis.
///
/// Numeric payloads are reported as `f64` regardless of the scalar type
/// the computation ran in.
#[derive(Debug, Error)]
#[non_exhaustive]
pub enum Error {
    #[error("system has no modes")]
    EmptyModeSet,

    #[error("state dimension must be at least 1")]
    ZeroDimension,

    #[error("mode {index} is {rows}x{cols}, expected {dim}x{dim}")]
    ModeShape {
        index: usize,
        rows: usize,
        cols: usize,
        dim: usize,
    },

    #[error("non-finite value in {what}")]
    NonFinite { what: String },

    #[error("{what}: entry {index} is {value}, outside [0, 1]")]
    ProbabilityEntry {
        what: String,
        index: usize,
        value: f64,
    },

    #[error("{what}: entries sum to {sum}, expected 1 within {tol:e}")]
    ProbabilitySum { what: String, sum: f64, tol: f64 },

    #[error("transition matrix must be {m}x{m}, got {rows}x{cols}")]
    TransitionShape { m: usize, rows: usize, cols: usize },

    #[error("schedule covers {horizon} steps, step {step} requested")]
    ScheduleExhausted { step: usize, horizon: usize },

    #[error("step index must be at least 1")]
    StepIndexZero,

    #[error("horizon must be at least 1")]
    ZeroHorizon,

    #[error("dimension mismatch in {what}: expected {expected}, got {found}")]
    DimensionMismatch {
        what: String,
        expected: usize,
        found: usize,
    },

    #[error("covariance asymmetry {max_asymmetry:e} exceeds tolerance {tol:e}")]
    CovarianceAsymmetric { max_asymmetry: f64, tol: f64 },

    #[error("covariance eigenvalue {min_eigenvalue:e} is below the clamp floor {floor:e}")]
    CovarianceNotPsd { min_eigenvalue: f64, floor: f64 },

    #[error("mixture has no components")]
    EmptyMixture,

    #[error(
        "enumeration needs {required} components (~{approx_mib:.1} MiB); cap is {cap}. \
         Raise the component cap to proceed"
    )]
    ComponentCapExceeded {
        required: u128,
        cap: u128,
        approx_mib: f64,
    },

    #[error("mode index {index} out of range for {modes} modes")]
    ModeIndexOutOfRange { index: usize, modes: usize },

    #[error("mode path is empty")]
    EmptyPath,

    #[error("mode-conditional propagation requires a Markov law")]
    MarkovLawRequired,

    #[error("need at least {needed} trajectories, got {got}")]
    NotEnoughTrajectories { needed: usize, got: usize },

    #[error("trajectory has {len} states, step {k} requested")]
    TrajectoryTooShort { k: usize, len: usize },

    #[error("horizon mismatch: trace has {trace} entries, empirical moments have {moments}")]
    HorizonMismatch { trace: usize, moments: usize },
}

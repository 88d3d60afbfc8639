use alloc::boxed::Box;

use thiserror::Error;

/// Errors raised by the solver core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("Chebyshev order must be at least 1")]
    DegenerateGrid,
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("invalid domain map: {0}")]
    InvalidMap(&'static str),
    #[error("domains {left} and {right} do not share a boundary point")]
    Disconnected { left: usize, right: usize },
    #[error("integrand does not decay at infinity in domain {domain} (residue {residue:e})")]
    NonDecaying { domain: usize, residue: f64 },
    #[error("reference norm vanishes")]
    VanishingNorm,
    #[error("point {x} lies outside the damping layers")]
    OutsideLayer { x: f64 },
    #[error("iteration did not converge after {iterations} sweeps (last change {last_change:e})")]
    NotConverged { iterations: usize, last_change: f64 },
    #[error("singular step matrix")]
    SingularStepMatrix,
    #[error("singular boundary system at time level {level}")]
    SingularBoundarySystem { level: usize },
    #[error("singular auxiliary 4x4 system at level {level}, column {column}")]
    SingularAuxSystem { level: usize, column: usize },
    #[error("step {step} failed: {cause}")]
    StepFailed { step: usize, cause: Box<Error> },
    #[error("invalid setup: {0}")]
    InvalidSetup(&'static str),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

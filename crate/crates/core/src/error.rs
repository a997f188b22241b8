//! Crate-wide error type.
//!
//! Validation failures (bad arguments, mismatched dimensions, out-of-range
//! parameters) and numerical failures (non-convergence, inconsistent data)
//! share one enum so callers can match on the distinction where it matters.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    /// A state vector needs at least one amplitude.
    #[error("state vector has no amplitudes")]
    EmptyState,

    /// All-zero amplitudes cannot be normalized.
    #[error("state vector has zero norm")]
    ZeroNorm,

    /// NaN or infinity where a finite number is required.
    #[error("non-finite value in {context}")]
    NonFinite { context: &'static str },

    /// Two states (or a state and a network) disagree on total photon number.
    #[error("photon number mismatch: {left} vs {right}")]
    PhotonMismatch { left: usize, right: usize },

    /// A linear form must have at least one nonzero coefficient.
    #[error("linear form ({alpha}, {beta}) is identically zero")]
    ZeroForm { alpha: String, beta: String },

    /// A detector network needs at least one form.
    #[error("detector network has no forms")]
    EmptyNetwork,

    /// The network columns are not isometric, so outcome probabilities
    /// would not sum to one.
    #[error("detector network is not isometric (column norms {col_h:.3e}, {col_v:.3e}, cross overlap {cross:.3e})")]
    NotIsometric { col_h: f64, col_v: f64, cross: f64 },

    /// A parameter fell outside its documented domain.
    #[error("parameter {name} = {value} violates {constraint}")]
    BadParameter {
        name: &'static str,
        value: f64,
        constraint: &'static str,
    },

    /// A measured four-fold visibility that no overlap ratio in [0, 1]
    /// can reproduce at the given pairwise visibility.
    #[error("four-fold visibility {v4} is outside the reachable range [{lo}, {hi}] for pairwise visibility {v2}")]
    VisibilityUnreachable { v4: f64, v2: f64, lo: f64, hi: f64 },

    /// Rates whose combination has no physical interpretation, e.g. a
    /// four-fold rate below its accidental floor.
    #[error("inconsistent rates: {context}")]
    InconsistentRates { context: String },

    /// Too little phase coverage to determine a fringe of the requested
    /// harmonic.
    #[error("phase span {span:.4} rad with {points} distinct points cannot constrain a harmonic-{harmonic} fringe")]
    InsufficientSpan {
        span: f64,
        points: usize,
        harmonic: u32,
    },

    /// Iterative refinement did not reach its tolerance.
    #[error("{what} did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    /// The state never becomes orthogonal to its phase-shifted copy.
    #[error("no orthogonal phase exists: minimum |overlap| is {min_overlap:.3e}")]
    NoOrthogonalPhase { min_overlap: f64 },

    /// Fewer data points than the estimator needs.
    #[error("need at least {needed} points for {what}, got {got}")]
    TooFewPoints {
        what: &'static str,
        needed: usize,
        got: usize,
    },
}

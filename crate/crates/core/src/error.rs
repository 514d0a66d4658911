//! Error types shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument violated its domain (negative horizon, zero mass, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A jump measure failed its construction invariants.
    #[error("invalid jump measure: {0}")]
    Measure(String),

    /// Rejection sampling exhausted its attempt budget.
    #[error("sampling failed after {attempts} attempts: envelope {envelope} too small for {what}")]
    SamplingFailure {
        what: String,
        envelope: f64,
        attempts: usize,
    },

    /// A modulus violated κ > 0, monotonicity, or another structural requirement.
    #[error("invalid modulus: {0}")]
    ModulusInvalid(String),

    /// A modulus is missing data an operation needs (e.g. domination constants).
    #[error("incomplete modulus: {0}")]
    ModulusIncomplete(String),

    /// A coefficient evaluator produced a non-finite value.
    #[error("coefficient evaluation failed at t = {t}, y = {y:?}")]
    CoefficientEval { t: f64, y: Vec<f64> },

    /// An iterate left the finite range; carries the first bad location.
    #[error("iterate {iterate} diverged at path {path}, node {node}")]
    Divergence {
        iterate: usize,
        path: usize,
        node: usize,
    },

    /// Two ensembles do not share a noise bundle or grid.
    #[error("bundle mismatch: {0}")]
    BundleMismatch(String),

    /// Argument lies outside Dom(G⁻¹).
    #[error("out of domain: {0}")]
    OutOfDomain(String),

    /// No stability certificate exists (or none is representable).
    #[error("no certificate: {0}")]
    NoCertificate(String),

    /// Deterministic replay produced different trajectories — an implementation bug.
    #[error("replay broken: {0}")]
    ReplayBroken(String),

    /// Adaptive quadrature failed to reach the requested tolerance.
    #[error("quadrature failed: {0}")]
    Quadrature(String),

    /// Snapshot read/write failure.
    #[error("snapshot: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

//! Simulation and diagnostics for scalar and small-dimension SDEs driven by
//! Brownian motion plus compensated small-jump noise, under coefficients that
//! need only a concave (possibly non-Lipschitz) modulus of continuity.
//!
//! The pieces:
//!
//! - [`noise`] — reproducible Brownian increments and finite-activity Poisson
//!   random measures behind one root seed, frozen into a [`noise::NoiseBundle`]
//!   of common random numbers.
//! - [`modulus`] — concave moduli κ with λ weights, grid validation, and the
//!   numerical classifier for `∫₀₊ dq/κ = ∞`.
//! - [`coeffs`] — coefficient sets b, σ, F, the empirical verifier of the
//!   difference condition `λ(t) κ(|y₁−y₂|²)`, and the affine growth constant.
//! - [`picard`] — the successive-approximation solver on a frozen bundle,
//!   mean-square sup-norm distances between iterates, the second-moment cap,
//!   and deterministic replay checks.
//! - [`stability`] — the `G = ∫ dq/κ` machinery with its inverse, comparison
//!   bounds, δ(ε) certificates, and the coupled two-solution stability test.
//! - [`scenarios`] — named built-in models, including a deliberate
//!   negative control for the condition verifier.
//! - [`report`] — one structured-text format for every diagnostic.

/// Library version, echoed into run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub mod coeffs;
pub mod error;
pub mod modulus;
pub mod noise;
pub mod picard;
pub mod quad;
pub mod report;
pub mod scenarios;
pub mod stability;

pub use coeffs::{
    assumption1_discrepancy, growth_constant, verify_assumption1, CoefficientSet, InitialLaw,
    PairSamplerConfig,
};
pub use error::{Error, Result};
pub use modulus::{check_osgood, ConcaveModulus, Lambda, OsgoodVerdict};
pub use noise::{JumpMeasure, LevyModel, NoiseBundle, TimeGrid};
pub use picard::{
    moment_bound_check, pathwise_uniqueness_check, picard_step, solve, sup_distance,
    ConvergenceReport, IterateEnsemble, SolveOptions, Verdict,
};
pub use stability::{
    bihari_bound, bihari_g, bihari_g_inv, delta_for_epsilon, mean_square_stability_test,
    BihariBound, StabilityCertificate, StabilityReport,
};

//! SDE coefficients b, σ, F with their modulus, plus the empirical verifier
//! for the coefficient-difference condition
//! `|Δb|² + ‖Δσ‖² + ∫|ΔF|² ν(dx) ≤ λ(t) κ(|y₁ − y₂|²)`
//! and the affine growth constant K₁ it implies.
//!
//! Norm conventions: `|·|²` on vectors is the component sum of squares and
//! `‖·‖²` on d×r matrices is the squared Frobenius norm — these are used
//! verbatim everywhere in the crate.

use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::modulus::ConcaveModulus;
use crate::noise::{substream, LevyModel, StreamPurpose, Substream, TimeGrid};

/// Drift evaluator `b(t, y)`, writing a d-vector.
pub type DriftFn = Arc<dyn Fn(f64, &[f64], &mut [f64]) + Send + Sync>;
/// Diffusion evaluator `σ(t, y)`, writing a d×r matrix row-major.
pub type DiffusionFn = Arc<dyn Fn(f64, &[f64], &mut [f64]) + Send + Sync>;
/// Jump coefficient `F(t, y, x)`, writing a d-vector.
pub type JumpCoeffFn = Arc<dyn Fn(f64, &[f64], &[f64], &mut [f64]) + Send + Sync>;
/// Per-path initial-value sampler.
pub type InitialSampler = Arc<dyn Fn(&mut Substream) -> Vec<f64> + Send + Sync>;

/// Initial law ξ with finite second moment.
#[derive(Clone)]
pub enum InitialLaw {
    PointMass(Vec<f64>),
    Sampler {
        draw: InitialSampler,
        /// Declared E|ξ|².
        second_moment: f64,
    },
}

impl std::fmt::Debug for InitialLaw {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            InitialLaw::PointMass(v) => write!(f, "PointMass({v:?})"),
            InitialLaw::Sampler { second_moment, .. } => {
                write!(f, "Sampler(E|xi|^2 = {second_moment})")
            }
        }
    }
}

impl InitialLaw {
    /// Draw the value for one path. Point masses ignore the stream.
    pub fn draw(&self, stream: &mut Substream) -> Vec<f64> {
        match self {
            InitialLaw::PointMass(v) => v.clone(),
            InitialLaw::Sampler { draw, .. } => draw(stream),
        }
    }

    /// E|ξ|², exact for point masses.
    pub fn second_moment(&self) -> f64 {
        match self {
            InitialLaw::PointMass(v) => v.iter().map(|x| x * x).sum(),
            InitialLaw::Sampler { second_moment, .. } => *second_moment,
        }
    }

    pub fn dim(&self) -> Option<usize> {
        match self {
            InitialLaw::PointMass(v) => Some(v.len()),
            InitialLaw::Sampler { .. } => None,
        }
    }
}

/// Norm conventions shared by the whole crate.
pub mod norms {
    /// Component sum of squares.
    pub fn vec_sq(v: &[f64]) -> f64 {
        v.iter().map(|x| x * x).sum()
    }

    /// `Σᵢ (aᵢ − bᵢ)²`.
    pub fn vec_diff_sq(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
    }
}

/// Coefficients of one equation: evaluators, dimensions, horizon, initial law,
/// the driving Lévy model, and the modulus the coefficients are measured
/// against. Evaluators must be pure; the set is immutable and thread-safe.
#[derive(Clone)]
pub struct CoefficientSet {
    dim: usize,
    horizon: f64,
    drift: DriftFn,
    diffusion: DiffusionFn,
    jump: JumpCoeffFn,
    pub initial: InitialLaw,
    pub levy: LevyModel,
    pub modulus: ConcaveModulus,
}

impl std::fmt::Debug for CoefficientSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CoefficientSet")
            .field("dim", &self.dim)
            .field("brownian_dim", &self.levy.brownian_dim)
            .field("horizon", &self.horizon)
            .field("initial", &self.initial)
            .field("modulus", &self.modulus.name())
            .finish()
    }
}

impl CoefficientSet {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        dim: usize,
        horizon: f64,
        drift: DriftFn,
        diffusion: DiffusionFn,
        jump: JumpCoeffFn,
        initial: InitialLaw,
        levy: LevyModel,
        modulus: ConcaveModulus,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("state dimension must be >= 1".into()));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidInput(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        if let Some(d) = initial.dim() {
            if d != dim {
                return Err(Error::InvalidInput(format!(
                    "initial value has dimension {d}, coefficients have {dim}"
                )));
            }
        }
        let set = Self {
            dim,
            horizon,
            drift,
            diffusion,
            jump,
            initial,
            levy,
            modulus,
        };
        // The at-origin values must be finite on [0, T] (spot checks here;
        // growth_constant sweeps the full grid).
        for t in [0.0, 0.5 * horizon, horizon] {
            set.origin_load(t)?;
        }
        Ok(set)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Same coefficients started from a different initial law.
    pub fn with_initial(mut self, initial: InitialLaw) -> Self {
        self.initial = initial;
        self
    }

    /// Same coefficients measured against a different modulus.
    pub fn with_modulus(mut self, modulus: ConcaveModulus) -> Self {
        self.modulus = modulus;
        self
    }

    pub fn brownian_dim(&self) -> usize {
        self.levy.brownian_dim
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn drift_into(&self, t: f64, y: &[f64], out: &mut [f64]) {
        debug_assert_eq!(y.len(), self.dim);
        debug_assert_eq!(out.len(), self.dim);
        (self.drift)(t, y, out);
    }

    pub fn diffusion_into(&self, t: f64, y: &[f64], out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.dim * self.levy.brownian_dim);
        (self.diffusion)(t, y, out);
    }

    pub fn jump_into(&self, t: f64, y: &[f64], x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.dim);
        (self.jump)(t, y, x, out);
    }

    /// `∫ F(t, y, x) ν(dx)` — the compensator integrand of the jump part.
    pub fn jump_compensator_into(&self, t: f64, y: &[f64], out: &mut [f64]) -> Result<()> {
        let mut buf = vec![0.0; self.dim];
        for (k, slot) in out.iter_mut().enumerate() {
            *slot = self.levy.measure.integrate_against(|x| {
                (self.jump)(t, y, x, &mut buf);
                buf[k]
            })?;
        }
        Ok(())
    }

    /// `|b(t,0)|² + ‖σ(t,0)‖² + ∫ |F(t,0,x)|² ν(dx)`.
    fn origin_load(&self, t: f64) -> Result<f64> {
        let origin = vec![0.0; self.dim];
        let v = self.squared_load(t, &origin)?;
        if !v.is_finite() {
            return Err(Error::CoefficientEval { t, y: origin });
        }
        Ok(v)
    }

    /// `|b(t,y)|² + ‖σ(t,y)‖² + ∫ |F(t,y,x)|² ν(dx)`.
    pub fn squared_load(&self, t: f64, y: &[f64]) -> Result<f64> {
        let mut b = vec![0.0; self.dim];
        let mut s = vec![0.0; self.dim * self.levy.brownian_dim];
        let mut fbuf = vec![0.0; self.dim];
        (self.drift)(t, y, &mut b);
        (self.diffusion)(t, y, &mut s);
        let jump_part = self.levy.measure.integrate_against(|x| {
            (self.jump)(t, y, x, &mut fbuf);
            norms::vec_sq(&fbuf)
        })?;
        Ok(norms::vec_sq(&b) + norms::vec_sq(&s) + jump_part)
    }
}

/// Left side minus right side of the coefficient-difference condition at one
/// `(t, y₁, y₂)`. Nonpositive means the pair satisfies the condition.
pub fn assumption1_discrepancy(
    coeffs: &CoefficientSet,
    t: f64,
    y1: &[f64],
    y2: &[f64],
) -> Result<f64> {
    let d = coeffs.dim;
    let r = coeffs.levy.brownian_dim;
    let mut b1 = vec![0.0; d];
    let mut b2 = vec![0.0; d];
    coeffs.drift_into(t, y1, &mut b1);
    coeffs.drift_into(t, y2, &mut b2);
    let mut s1 = vec![0.0; d * r];
    let mut s2 = vec![0.0; d * r];
    coeffs.diffusion_into(t, y1, &mut s1);
    coeffs.diffusion_into(t, y2, &mut s2);
    let mut f1 = vec![0.0; d];
    let mut f2 = vec![0.0; d];
    let jump_part = coeffs.levy.measure.integrate_against(|x| {
        coeffs.jump_into(t, y1, x, &mut f1);
        coeffs.jump_into(t, y2, x, &mut f2);
        norms::vec_diff_sq(&f1, &f2)
    })?;
    let lhs = norms::vec_diff_sq(&b1, &b2) + norms::vec_diff_sq(&s1, &s2) + jump_part;
    if !lhs.is_finite() {
        return Err(Error::CoefficientEval { t, y: y1.to_vec() });
    }
    let gap = norms::vec_diff_sq(y1, y2);
    let rhs = coeffs.modulus.lambda().at(t) * coeffs.modulus.kappa(gap);
    Ok(lhs - rhs)
}

/// How the empirical verifier samples `(t, y₁, y₂)` triples.
#[derive(Debug, Clone)]
pub struct PairSamplerConfig {
    pub pairs: usize,
    pub box_radius: f64,
    /// Fraction of pairs rescaled toward the origin (log-uniform down to
    /// 10⁻¹² in magnitude), where non-Lipschitz behaviour concentrates.
    pub near_origin_fraction: f64,
    /// Fraction of pairs with y₂ a log-uniformly small perturbation of y₁.
    pub near_diagonal_fraction: f64,
    pub tol: f64,
    pub seed: u64,
}

impl Default for PairSamplerConfig {
    fn default() -> Self {
        Self {
            pairs: 4000,
            box_radius: 2.0,
            near_origin_fraction: 0.4,
            near_diagonal_fraction: 0.3,
            tol: 1e-9,
            seed: 0x5eed,
        }
    }
}

/// Outcome of the empirical coefficient-condition verifier.
#[derive(Debug, Clone)]
pub struct Assumption1Report {
    pub pass: bool,
    pub tol: f64,
    pub pairs_checked: usize,
    /// Largest discrepancy seen and where.
    pub max_discrepancy: f64,
    pub max_discrepancy_pair: (f64, Vec<f64>, Vec<f64>),
    /// Worst pair by the scale-free ratio (lhs − rhs)/|y₁ − y₂|²; this is the
    /// diagnostic that localises violations near the origin.
    pub worst_ratio: f64,
    pub worst_pair: (f64, Vec<f64>, Vec<f64>),
}

/// Sample `(t, y₁, y₂)` triples — including clusters near the origin and near
/// the diagonal — and report the worst discrepancy. Pass iff the maximum
/// discrepancy stays within `tol`.
pub fn verify_assumption1(
    coeffs: &CoefficientSet,
    config: &PairSamplerConfig,
) -> Result<Assumption1Report> {
    if config.pairs == 0 {
        return Err(Error::InvalidInput("pair count must be >= 1".into()));
    }
    let d = coeffs.dim;
    let mut rng = substream(config.seed, StreamPurpose::Diagnostics, 0);
    let uniform_point = |rng: &mut Substream, radius: f64| -> Vec<f64> {
        (0..d)
            .map(|_| (2.0 * rng.random::<f64>() - 1.0) * radius)
            .collect()
    };

    let mut max_disc = f64::NEG_INFINITY;
    let mut max_pair = (0.0, vec![0.0; d], vec![0.0; d]);
    let mut worst_ratio = f64::NEG_INFINITY;
    let mut worst_pair = (0.0, vec![0.0; d], vec![0.0; d]);

    for _ in 0..config.pairs {
        let t = rng.random::<f64>() * coeffs.horizon;
        let near_origin = rng.random::<f64>() < config.near_origin_fraction;
        let near_diag = rng.random::<f64>() < config.near_diagonal_fraction;

        let scale = if near_origin {
            10f64.powf(-12.0 * rng.random::<f64>())
        } else {
            1.0
        };
        let y1: Vec<f64> = uniform_point(&mut rng, config.box_radius * scale);
        let y2: Vec<f64> = if near_diag {
            let gap = 10f64.powf(-12.0 * rng.random::<f64>()) * config.box_radius * scale;
            y1.iter()
                .map(|v| v + gap * (2.0 * rng.random::<f64>() - 1.0))
                .collect()
        } else if near_origin && rng.random::<f64>() < 0.25 {
            // The exact origin is a common worst case; probe it directly.
            vec![0.0; d]
        } else {
            uniform_point(&mut rng, config.box_radius * scale)
        };

        let disc = assumption1_discrepancy(coeffs, t, &y1, &y2)?;
        if disc > max_disc {
            max_disc = disc;
            max_pair = (t, y1.clone(), y2.clone());
        }
        let gap = norms::vec_diff_sq(&y1, &y2);
        if gap > 0.0 {
            let ratio = disc / gap;
            if ratio > worst_ratio {
                worst_ratio = ratio;
                worst_pair = (t, y1, y2);
            }
        }
    }
    if worst_ratio == f64::NEG_INFINITY {
        worst_ratio = max_disc;
        worst_pair = max_pair.clone();
    }
    Ok(Assumption1Report {
        pass: max_disc <= config.tol,
        tol: config.tol,
        pairs_checked: config.pairs,
        max_discrepancy: max_disc,
        max_discrepancy_pair: max_pair,
        worst_ratio,
        worst_pair,
    })
}

/// The affine growth constant: with domination κ(q) ≤ a + b q,
///
/// `K₁ = max( 2 sup_t [ |b(t,0)|² + ‖σ(t,0)‖² + ∫|F(t,0,x)|²ν(dx) + λ(t)a ],
///            2 b sup_t λ(t) )`,
///
/// the sup taken over the grid nodes. It bounds the squared load by
/// `K₁ (1 + |y|²)`.
pub fn growth_constant(coeffs: &CoefficientSet, grid: &TimeGrid) -> Result<f64> {
    let (a, b) = coeffs.modulus.domination().ok_or_else(|| {
        Error::ModulusIncomplete(format!(
            "modulus `{}` declares no domination constants (a, b)",
            coeffs.modulus.name()
        ))
    })?;
    let lambda = coeffs.modulus.lambda();
    let mut sup_origin = f64::NEG_INFINITY;
    let mut sup_lambda: f64 = 0.0;
    for i in 0..=grid.steps() {
        let t = grid.node(i);
        let l = lambda.at(t);
        sup_lambda = sup_lambda.max(l);
        let load = coeffs.origin_load(t)?;
        sup_origin = sup_origin.max(load + l * a);
    }
    Ok((2.0 * sup_origin).max(2.0 * b * sup_lambda))
}

/// Sampled verification of the growth bound `squared_load ≤ K₁ (1 + |y|²)`.
#[derive(Debug, Clone)]
pub struct GrowthBoundReport {
    pub k1: f64,
    pub max_ratio: f64,
    pub worst_y: Vec<f64>,
    pub pass: bool,
    pub samples: usize,
}

pub fn verify_growth_bound(
    coeffs: &CoefficientSet,
    grid: &TimeGrid,
    k1: f64,
    samples: usize,
    seed: u64,
) -> Result<GrowthBoundReport> {
    let mut rng = substream(seed, StreamPurpose::Diagnostics, 1);
    let d = coeffs.dim;
    let mut max_ratio = f64::NEG_INFINITY;
    let mut worst_y = vec![0.0; d];
    for _ in 0..samples {
        let t = grid.node((rng.random::<f64>() * grid.steps() as f64) as usize);
        // Log-uniform magnitudes cover both the origin region and the bulk.
        let scale = 10f64.powf(3.0 - 6.0 * rng.random::<f64>());
        let y: Vec<f64> = (0..d)
            .map(|_| (2.0 * rng.random::<f64>() - 1.0) * scale)
            .collect();
        let ratio = coeffs.squared_load(t, &y)? / (1.0 + norms::vec_sq(&y));
        if ratio > max_ratio {
            max_ratio = ratio;
            worst_y = y;
        }
    }
    Ok(GrowthBoundReport {
        k1,
        max_ratio,
        worst_y,
        pass: max_ratio <= k1 + 1e-9,
        samples,
    })
}

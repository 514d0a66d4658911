//! Nonlinear integral-inequality machinery and the mean-square stability
//! diagnostics built on it.
//!
//! The central object is `G(q) = ∫₁^q ds/κ(s)` together with its inverse:
//! whenever `u(t) ≤ u₀ + ∫₀ᵗ v(s) κ(u(s)) ds`, the comparison bound
//! `u(t) ≤ G⁻¹(G(u₀) + ∫₀ᵗ v(s) ds)` holds while the argument stays inside
//! `Dom(G⁻¹)`. For a divergent modulus the left end of that domain is −∞ and
//! `u₀ = 0` forces the bound to collapse to zero; for a convergent modulus
//! the domain is genuinely bounded below and leaving it is an error.
//!
//! All G evaluations integrate in the log variable (the divergence at the
//! origin is logarithmic-family, so the substitution removes the stiffness)
//! and split at the modulus's declared branch points.

use std::sync::Arc;

use crate::coeffs::{norms, verify_assumption1, CoefficientSet, InitialLaw, PairSamplerConfig};
use crate::error::{Error, Result};
use crate::modulus::{reciprocal_kappa_integral, ConcaveModulus, Lambda, OsgoodClass};
use crate::noise::{NoiseBundle, TimeGrid};
use crate::picard::{solve, sup_distance, SolveOptions, Verdict};

/// Quadrature tolerance for G evaluations.
const G_QUAD_TOL: f64 = 1e-9;

/// Relative tolerance of the monotone inversion.
const G_INV_REL_TOL: f64 = 1e-12;

/// Lowest representable argument of κ; below this an Osgood G has already
/// left the floating-point range.
const Q_FLOOR: f64 = 1e-300;

/// Largest bracketing exponent for the inversion (`q = e^w`).
const W_CAP: f64 = 709.0;

/// `G(q) = ∫₁^q ds/κ(s)`; negative for `q < 1`, zero at `q = 1`.
pub fn bihari_g(modulus: &ConcaveModulus, q: f64) -> Result<f64> {
    if !q.is_finite() || q <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "G is defined for q > 0, got {q}"
        )));
    }
    if q == 1.0 {
        return Ok(0.0);
    }
    reciprocal_kappa_integral(modulus, 1.0, q, G_QUAD_TOL)
}

/// Inverse of G by monotone bracketing and bisection in `w = ln q`.
///
/// For a divergent modulus, arguments below `G(1e-300)` return 0 — the value
/// has left the representable range on its way to the Osgood limit. For a
/// convergent modulus the same situation is a genuine domain violation.
pub fn bihari_g_inv(modulus: &ConcaveModulus, x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::InvalidInput(format!(
            "G inverse needs a finite argument, got {x}"
        )));
    }
    let g_at = |w: f64| -> Result<f64> { bihari_g(modulus, w.exp()) };
    if x == 0.0 {
        return Ok(1.0);
    }
    let (mut w_lo, mut w_hi);
    if x > 0.0 {
        w_lo = 0.0;
        w_hi = 1.0;
        let mut step = 1.0;
        while g_at(w_hi)? < x {
            step *= 2.0;
            w_hi += step;
            if w_hi > W_CAP {
                return Err(Error::OutOfDomain(format!(
                    "G inverse argument {x} exceeds G at the top of the representable range"
                )));
            }
        }
    } else {
        w_hi = 0.0;
        w_lo = -1.0;
        let mut step = 1.0;
        loop {
            let floor_hit = w_lo <= Q_FLOOR.ln();
            let g_lo = g_at(w_lo.max(Q_FLOOR.ln()))?;
            if g_lo <= x {
                break;
            }
            if floor_hit {
                return match modulus.osgood_class() {
                    // The true inverse is positive but below 1e-300; report
                    // the Osgood limit.
                    OsgoodClass::Divergent => Ok(0.0),
                    OsgoodClass::Convergent => Err(Error::OutOfDomain(format!(
                        "{x} lies below inf G = {g_lo} of the non-divergent modulus `{}`",
                        modulus.name()
                    ))),
                };
            }
            step *= 2.0;
            w_lo -= step;
        }
        w_lo = w_lo.max(Q_FLOOR.ln());
    }
    // Bisection: G(e^w) − x changes sign on [w_lo, w_hi].
    for _ in 0..200 {
        if (w_hi - w_lo).abs() <= G_INV_REL_TOL {
            break;
        }
        let mid = 0.5 * (w_lo + w_hi);
        if g_at(mid)? < x {
            w_lo = mid;
        } else {
            w_hi = mid;
        }
    }
    Ok((0.5 * (w_lo + w_hi)).exp())
}

/// The comparison bound `G⁻¹(G(u₀) + ∫₀ᵗ v(s) ds)`.
///
/// `u₀ = 0` with a divergent modulus is the Osgood limit: the bound is 0.
pub fn bihari_bound(u0: f64, v: &Lambda, modulus: &ConcaveModulus, t: f64) -> Result<f64> {
    if !(u0 >= 0.0 && u0.is_finite()) {
        return Err(Error::InvalidInput(format!("u0 must be >= 0, got {u0}")));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidInput(format!("t must be >= 0, got {t}")));
    }
    if u0 == 0.0 {
        return match modulus.osgood_class() {
            OsgoodClass::Divergent => Ok(0.0),
            OsgoodClass::Convergent => {
                // G(0⁺) is finite here; saturate at the floor.
                let g0 = bihari_g(modulus, Q_FLOOR)?;
                bihari_g_inv(modulus, g0 + v.integral(t))
            }
        };
    }
    let arg = bihari_g(modulus, u0)? + v.integral(t);
    bihari_g_inv(modulus, arg)
}

/// Precomputed `q ↦ G(q)` knots with the inversion and bound operations
/// attached; build once per modulus, then read-only.
#[derive(Debug, Clone)]
pub struct BihariBound {
    pub modulus: ConcaveModulus,
    pub u0: f64,
    pub v: Lambda,
    g_table: Arc<Vec<(f64, f64)>>,
}

impl BihariBound {
    pub fn new(modulus: ConcaveModulus, u0: f64, v: Lambda) -> Result<Self> {
        if !(u0 >= 0.0 && u0.is_finite()) {
            return Err(Error::InvalidInput(format!("u0 must be >= 0, got {u0}")));
        }
        let mut table = Vec::with_capacity(64);
        for q in crate::modulus::log_grid(1e-12, 1e3, 64) {
            table.push((q, bihari_g(&modulus, q)?));
        }
        for w in table.windows(2) {
            if w[1].1 <= w[0].1 {
                return Err(Error::ModulusInvalid(format!(
                    "G is not strictly increasing near q = {} for `{}`",
                    w[0].0,
                    modulus.name()
                )));
            }
        }
        Ok(Self {
            modulus,
            u0,
            v,
            g_table: Arc::new(table),
        })
    }

    pub fn g(&self, q: f64) -> Result<f64> {
        bihari_g(&self.modulus, q)
    }

    pub fn g_inv(&self, x: f64) -> Result<f64> {
        bihari_g_inv(&self.modulus, x)
    }

    pub fn bound_at(&self, t: f64) -> Result<f64> {
        bihari_bound(self.u0, &self.v, &self.modulus, t)
    }

    pub fn table(&self) -> &[(f64, f64)] {
        &self.g_table
    }
}

// ---------------------------------------------------------------------------
// δ(ε) certificates
// ---------------------------------------------------------------------------

/// A certified initial-gap threshold: any squared initial gap with
/// `4 E|ξ−η|² ≤ δ` keeps `E sup |X^ξ − X^η|²` within ε on `[0, T]`.
#[derive(Debug, Clone)]
pub struct StabilityCertificate {
    pub eps: f64,
    /// ε₁ = ε/2, the working target of the integral condition.
    pub eps1: f64,
    pub delta: f64,
    /// κ₃(q) = factor · κ(q) with factor = 16 T sup λ.
    pub kappa3_factor: f64,
    /// Re-quadrature of `∫_δ^{ε₁} dq/κ₃` stored with the certificate; always
    /// at least the horizon.
    pub recheck_integral: f64,
    pub horizon: f64,
}

/// Largest δ with `∫_δ^{ε/2} dq/κ₃(q) ≥ T`, where `κ₃ = 16 T (sup λ) κ`.
/// Solved by the monotone inversion of G (itself bisection), then re-checked
/// by quadrature; always δ < ε/2.
pub fn delta_for_epsilon(
    modulus: &ConcaveModulus,
    horizon: f64,
    eps: f64,
) -> Result<StabilityCertificate> {
    if !eps.is_finite() || eps <= 0.0 {
        return Err(Error::InvalidInput(format!("eps must be > 0, got {eps}")));
    }
    if !horizon.is_finite() || horizon <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "horizon must be > 0, got {horizon}"
        )));
    }
    let eps1 = 0.5 * eps;
    // 16 = 4 (four-term splitting of the coupled difference) * 4 (Doob's
    // maximal inequality at p = 2) on the martingale parts.
    let factor = 16.0 * horizon * modulus.lambda().sup();
    if factor <= 0.0 {
        return Err(Error::NoCertificate(
            "sup lambda is zero; kappa3 vanishes identically".into(),
        ));
    }
    // ∫_δ^{ε₁} dq/κ₃ = (G(ε₁) − G(δ))/factor ≥ T  ⇔  G(δ) ≤ G(ε₁) − factor·T.
    let target = bihari_g(modulus, eps1)? - factor * horizon;
    let mut delta = match bihari_g_inv(modulus, target) {
        Ok(d) => d,
        Err(Error::OutOfDomain(msg)) => {
            return Err(Error::NoCertificate(format!(
                "integral mass of 1/kappa3 below the target is insufficient: {msg}"
            )))
        }
        Err(other) => return Err(other),
    };
    if delta <= 0.0 {
        return Err(Error::NoCertificate(format!(
            "certificate exists but lies below the representable floor {Q_FLOOR:e}"
        )));
    }
    // Keep the defining inequality true under quadrature error: nudge δ down
    // until the re-check integral clears the horizon.
    let mut recheck = (bihari_g(modulus, eps1)? - bihari_g(modulus, delta)?) / factor;
    let mut rounds = 0;
    while recheck < horizon && rounds < 200 {
        delta *= 1.0 - 1e-9;
        recheck = (bihari_g(modulus, eps1)? - bihari_g(modulus, delta)?) / factor;
        rounds += 1;
    }
    if recheck < horizon {
        return Err(Error::NoCertificate(format!(
            "re-quadrature stalled at {recheck} < horizon {horizon}"
        )));
    }
    debug_assert!(delta < eps1);
    Ok(StabilityCertificate {
        eps,
        eps1,
        delta,
        kappa3_factor: factor,
        recheck_integral: recheck,
        horizon,
    })
}

// ---------------------------------------------------------------------------
// Empirical mean-square stability
// ---------------------------------------------------------------------------

/// Outcome of one coupled two-solution experiment.
#[derive(Debug, Clone)]
pub struct StabilityReport {
    pub eps: f64,
    /// Certificate threshold, when one exists for this modulus and horizon.
    pub delta: Option<f64>,
    pub certificate_error: Option<String>,
    pub kappa3_desc: String,
    /// `Ê sup_{s ≤ T} |X^ξ(s) − X^η(s)|²` and its standard error.
    pub estimate: f64,
    pub se: f64,
    /// Exact (point masses) or sampled E|ξ − η|².
    pub initial_gap_sq: f64,
    /// The certificate is stated for 4 E|ξ−η|²; both are reported.
    pub initial_gap_sq_x4: f64,
    /// Whether 4 E|ξ−η|² ≤ δ held (None when no certificate exists).
    pub precondition_held: Option<bool>,
    /// The coefficient condition held empirically; when it fails, the
    /// certificate does not apply and is reported as such.
    pub assumption1_pass: bool,
    pub solver_verdicts: (Verdict, Verdict),
    pub pass: bool,
}

/// Solve the equation from ξ and from η on the same noise bundle and compare
/// `Ê sup |X^ξ − X^η|²` against ε. With common noise and identical initial
/// values the estimate is exactly zero.
#[allow(clippy::too_many_arguments)]
pub fn mean_square_stability_test(
    coeffs: &CoefficientSet,
    xi: InitialLaw,
    eta: InitialLaw,
    grid: TimeGrid,
    paths: usize,
    seed: u64,
    eps: f64,
    options: &SolveOptions,
) -> Result<StabilityReport> {
    if !eps.is_finite() || eps <= 0.0 {
        return Err(Error::InvalidInput(format!("eps must be > 0, got {eps}")));
    }
    let bundle = Arc::new(NoiseBundle::generate(seed, grid, &coeffs.levy, paths)?);
    let coeffs_xi = coeffs.clone().with_initial(xi);
    let coeffs_eta = coeffs.clone().with_initial(eta);

    let run_xi = solve(&coeffs_xi, &bundle, options)?;
    let run_eta = solve(&coeffs_eta, &bundle, options)?;
    let (estimate, se) = sup_distance(&run_xi.ensemble, &run_eta.ensemble)?;

    let n = run_xi.ensemble.path_count();
    let initial_gap_sq = (0..n)
        .map(|p| {
            norms::vec_diff_sq(
                run_xi.ensemble.initial_value(p),
                run_eta.ensemble.initial_value(p),
            )
        })
        .sum::<f64>()
        / n as f64;

    let certificate = delta_for_epsilon(&coeffs.modulus, grid.horizon(), eps);
    let (delta, certificate_error) = match &certificate {
        Ok(c) => (Some(c.delta), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let kappa3_factor = 16.0 * grid.horizon() * coeffs.modulus.lambda().sup();
    let assumption1 = verify_assumption1(coeffs, &PairSamplerConfig::default())?;

    Ok(StabilityReport {
        eps,
        delta,
        certificate_error,
        kappa3_desc: format!(
            "kappa3(q) = {kappa3_factor} * kappa_{}(q) (16 * T * sup lambda)",
            coeffs.modulus.name()
        ),
        estimate,
        se,
        initial_gap_sq,
        initial_gap_sq_x4: 4.0 * initial_gap_sq,
        precondition_held: delta.map(|d| 4.0 * initial_gap_sq <= d),
        assumption1_pass: assumption1.pass,
        solver_verdicts: (run_xi.report.verdict, run_eta.report.verdict),
        pass: estimate <= eps + 5.0 * se,
    })
}

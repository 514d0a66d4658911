//! Concave moduli κ with their λ weights, domination constants, and the
//! numerical Osgood-divergence classifier.
//!
//! A modulus is a black-box evaluator; structural requirements (κ(0) = 0,
//! monotonicity, concavity, affine domination) are checked on finite grids,
//! not symbolically. Formulas that are singular at q = 0 evaluate κ(0) = 0 by
//! explicit case and fall back to the linear chord below `q = 1e-300`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quad;

/// Below this point the modulus evaluates along the chord through the origin.
const CHORD_FLOOR: f64 = 1e-300;

/// Which function the concavity requirement applies to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConcavityMode {
    /// κ itself is concave.
    Kappa,
    /// κ(q)²/q is concave.
    KappaSquaredOverQ,
}

/// Declared behaviour of `∫₀₊ dq/κ(q)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OsgoodClass {
    Divergent,
    Convergent,
}

/// The weight λ(t): constant, or a nonnegative step function whose sup is
/// realised by the table maximum.
#[derive(Debug, Clone)]
pub enum Lambda {
    Constant(f64),
    /// `(from_time, value)` segments; the first segment must start at 0.
    Steps(Vec<(f64, f64)>),
}

impl Lambda {
    pub fn constant(v: f64) -> Result<Self> {
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "lambda must be finite and >= 0, got {v}"
            )));
        }
        Ok(Lambda::Constant(v))
    }

    pub fn steps(segments: Vec<(f64, f64)>) -> Result<Self> {
        if segments.is_empty() || segments[0].0 != 0.0 {
            return Err(Error::InvalidInput(
                "step lambda needs segments starting at t = 0".into(),
            ));
        }
        for w in segments.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::InvalidInput(
                    "step lambda segment times must increase".into(),
                ));
            }
        }
        if segments.iter().any(|&(_, v)| !(v.is_finite() && v >= 0.0)) {
            return Err(Error::InvalidInput(
                "step lambda values must be >= 0".into(),
            ));
        }
        Ok(Lambda::Steps(segments))
    }

    pub fn at(&self, t: f64) -> f64 {
        match self {
            Lambda::Constant(v) => *v,
            Lambda::Steps(segs) => {
                let mut val = segs[0].1;
                for &(from, v) in segs {
                    if t >= from {
                        val = v;
                    } else {
                        break;
                    }
                }
                val
            }
        }
    }

    pub fn sup(&self) -> f64 {
        match self {
            Lambda::Constant(v) => *v,
            Lambda::Steps(segs) => segs.iter().map(|&(_, v)| v).fold(0.0, f64::max),
        }
    }

    /// `∫₀ᵗ λ(s) ds`, exact for both representations.
    pub fn integral(&self, t: f64) -> f64 {
        match self {
            Lambda::Constant(v) => v * t.max(0.0),
            Lambda::Steps(segs) => {
                let mut total = 0.0;
                for (i, &(from, v)) in segs.iter().enumerate() {
                    if t <= from {
                        break;
                    }
                    let until = segs.get(i + 1).map(|&(f, _)| f).unwrap_or(f64::INFINITY);
                    total += v * (t.min(until) - from);
                }
                total
            }
        }
    }
}

type KappaFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A modulus of continuity for the coefficient-difference bound
/// `λ(t) κ(|y₁ − y₂|²)`.
#[derive(Clone)]
pub struct ConcaveModulus {
    name: String,
    raw: KappaFn,
    lambda: Lambda,
    /// (a, b) with κ(q) ≤ a + b q on the validation grid, when declared.
    domination: Option<(f64, f64)>,
    osgood: OsgoodClass,
    concavity: ConcavityMode,
    /// Branch points of the defining formula; quadrature splits here.
    breakpoints: Vec<f64>,
}

impl std::fmt::Debug for ConcaveModulus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ConcaveModulus")
            .field("name", &self.name)
            .field("osgood", &self.osgood)
            .field("concavity", &self.concavity)
            .field("domination", &self.domination)
            .finish()
    }
}

impl ConcaveModulus {
    pub fn new(
        name: impl Into<String>,
        kappa: KappaFn,
        lambda: Lambda,
        domination: Option<(f64, f64)>,
        osgood: OsgoodClass,
        concavity: ConcavityMode,
        breakpoints: Vec<f64>,
    ) -> Self {
        Self {
            name: name.into(),
            raw: kappa,
            lambda,
            domination,
            osgood,
            concavity,
            breakpoints,
        }
    }

    /// κ(q) = q. The Lipschitz special case.
    pub fn linear() -> Self {
        Self::new(
            "linear",
            Arc::new(|q| q),
            Lambda::Constant(1.0),
            Some((0.0, 1.0)),
            OsgoodClass::Divergent,
            ConcavityMode::Kappa,
            Vec::new(),
        )
    }

    /// κ(q) = q ln(1/q) on (0, 1/e], continued with its maximum value 1/e
    /// beyond (slope-zero affine continuation, C¹ at the joint).
    pub fn log_modulus() -> Self {
        let q_star = (-1.0_f64).exp();
        let cap = q_star; // q* ln(1/q*) = e⁻¹ · 1
        Self::new(
            "log",
            Arc::new(move |q| if q <= q_star { q * (1.0 / q).ln() } else { cap }),
            Lambda::Constant(1.0),
            Some((cap, 0.0)),
            OsgoodClass::Divergent,
            ConcavityMode::Kappa,
            vec![q_star],
        )
    }

    /// κ(q) = q ln(1/q) ln ln(1/q) up to its maximum, constant beyond.
    pub fn log_log_modulus() -> Self {
        // The maximum sits where (z - 1) ln z = 1 with z = ln(1/q).
        let mut lo = 2.0_f64;
        let mut hi = 3.0_f64;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if (mid - 1.0) * mid.ln() < 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let z_star = 0.5 * (lo + hi);
        let q_star = (-z_star).exp();
        let cap = q_star * z_star * z_star.ln();
        Self::new(
            "log-log",
            Arc::new(move |q| {
                if q <= q_star {
                    let l1 = (1.0 / q).ln();
                    q * l1 * l1.ln()
                } else {
                    cap
                }
            }),
            Lambda::Constant(1.0),
            Some((cap, 0.0)),
            OsgoodClass::Divergent,
            ConcavityMode::Kappa,
            vec![q_star],
        )
    }

    /// κ(q) = q^{3/4}: concave and monotone but not Osgood — the negative
    /// control for the divergence classifier.
    pub fn hoelder_three_quarter() -> Self {
        Self::new(
            "hoelder-3/4",
            Arc::new(|q: f64| q.powf(0.75)),
            Lambda::Constant(1.0),
            Some((1.0, 1.0)),
            OsgoodClass::Convergent,
            ConcavityMode::Kappa,
            Vec::new(),
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Evaluate κ. Exactly zero at q ≤ 0; linear chord below the floor.
    pub fn kappa(&self, q: f64) -> f64 {
        if q <= 0.0 {
            0.0
        } else if q < CHORD_FLOOR {
            (q / CHORD_FLOOR) * (self.raw)(CHORD_FLOOR)
        } else {
            (self.raw)(q)
        }
    }

    pub fn lambda(&self) -> &Lambda {
        &self.lambda
    }

    /// Replace the λ weight, keeping κ and its metadata.
    pub fn with_lambda(mut self, lambda: Lambda) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn domination(&self) -> Option<(f64, f64)> {
        self.domination
    }

    pub fn osgood_class(&self) -> OsgoodClass {
        self.osgood
    }

    pub fn concavity_mode(&self) -> ConcavityMode {
        self.concavity
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// Grid checks of the structural invariants: κ(0) = 0, monotonicity,
    /// midpoint concavity (of κ or κ²/q per the declared mode), and affine
    /// domination when constants are declared.
    pub fn validate(&self, tol: f64) -> Result<()> {
        if self.kappa(0.0) != 0.0 {
            return Err(Error::ModulusInvalid(format!(
                "{}: kappa(0) = {}, expected exactly 0",
                self.name,
                self.kappa(0.0)
            )));
        }
        let grid = log_grid(1e-12, 1.0, 64);
        let wide = log_grid(1e-12, 100.0, 96);
        for w in wide.windows(2) {
            let (lo, hi) = (self.kappa(w[0]), self.kappa(w[1]));
            if !(lo.is_finite() && hi.is_finite()) {
                return Err(Error::ModulusInvalid(format!(
                    "{}: kappa not finite near q = {}",
                    self.name, w[0]
                )));
            }
            if hi < lo - tol {
                return Err(Error::ModulusInvalid(format!(
                    "{}: kappa decreases between q = {} and q = {}",
                    self.name, w[0], w[1]
                )));
            }
        }
        let target = |q: f64| match self.concavity {
            ConcavityMode::Kappa => self.kappa(q),
            ConcavityMode::KappaSquaredOverQ => {
                let k = self.kappa(q);
                k * k / q
            }
        };
        for w in grid.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            if target(mid) < 0.5 * (target(w[0]) + target(w[1])) - tol {
                return Err(Error::ModulusInvalid(format!(
                    "{}: midpoint concavity fails between q = {} and q = {}",
                    self.name, w[0], w[1]
                )));
            }
        }
        if let Some((a, b)) = self.domination {
            for &q in &wide {
                if self.kappa(q) > a + b * q + tol {
                    return Err(Error::ModulusInvalid(format!(
                        "{}: kappa({q}) = {} exceeds a + b q = {}",
                        self.name,
                        self.kappa(q),
                        a + b * q
                    )));
                }
            }
        }
        Ok(())
    }
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && n >= 2);
    let (llo, lhi) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (llo + (lhi - llo) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// `∫_lo^hi dq / κ(q)` computed in the log variable `u = ln q`, where the
/// integrand becomes `e^u / κ(e^u)` and the logarithmic-family divergence at
/// the origin turns into a plain bounded integrand. The lower limit is capped
/// at the chord floor.
pub(crate) fn reciprocal_kappa_integral(
    m: &ConcaveModulus,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<f64> {
    if !(lo > 0.0 && hi > 0.0) {
        return Err(Error::InvalidInput(format!(
            "integration limits must be positive, got [{lo}, {hi}]"
        )));
    }
    let lo = lo.max(CHORD_FLOOR);
    let hi = hi.max(CHORD_FLOOR);
    let integrand = |u: f64| {
        let q = u.exp();
        let k = m.kappa(q);
        q / k
    };
    let mut cuts: Vec<f64> = m
        .breakpoints
        .iter()
        .filter(|&&b| b > 0.0)
        .map(|&b| b.ln())
        .collect();
    cuts.push(CHORD_FLOOR.ln());
    quad::integrate_with_breakpoints(integrand, lo.ln(), hi.ln(), &cuts, tol).map_err(|e| match e {
        Error::Quadrature(msg) => Error::ModulusInvalid(format!(
            "{}: 1/kappa not integrable on [{lo}, {hi}] ({msg})",
            m.name
        )),
        other => other,
    })
}

/// Divergence verdict of the numerical Osgood classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OsgoodVerdict {
    Divergent,
    Convergent,
}

/// Evidence record for `∫₀₊ dq/κ(q) = ∞`: the tail integrals `I(ε)` and their
/// growth rate. Numerical evidence, not a proof.
#[derive(Debug, Clone)]
pub struct OsgoodEvidence {
    pub modulus: String,
    pub eps: Vec<f64>,
    /// `I(ε) = ∫_ε^1 dq/κ(q)`.
    pub integrals: Vec<f64>,
    /// Growth of I per decade of 1/ε between successive ε values.
    pub growth_per_decade: Vec<f64>,
    pub growth_floor: f64,
    pub verdict: OsgoodVerdict,
}

impl OsgoodEvidence {
    pub const DISCLAIMER: &'static str =
        "divergence verdict is numerical evidence on a finite sequence, not a proof";
}

/// Default ε sequence 10⁻², 10⁻⁴, …, 10⁻¹².
pub fn default_eps_sequence() -> Vec<f64> {
    (1..=6).map(|k| 10f64.powi(-2 * k)).collect()
}

/// Default growth floor (per decade of 1/ε) separating the bundled divergent
/// moduli from the q^{3/4} negative control.
pub const DEFAULT_GROWTH_FLOOR: f64 = 0.01;

/// Classify `∫₀₊ dq/κ` by tabulating `I(ε) = ∫_ε^1 dq/κ` down the given
/// sequence: divergent iff the final growth per decade stays above the floor.
pub fn check_osgood(m: &ConcaveModulus, eps_sequence: &[f64]) -> Result<OsgoodEvidence> {
    check_osgood_with(m, eps_sequence, DEFAULT_GROWTH_FLOOR, 1e-9)
}

pub fn check_osgood_with(
    m: &ConcaveModulus,
    eps_sequence: &[f64],
    growth_floor: f64,
    quad_tol: f64,
) -> Result<OsgoodEvidence> {
    if eps_sequence.is_empty() {
        return Err(Error::InvalidInput("empty epsilon sequence".into()));
    }
    for w in eps_sequence.windows(2) {
        if w[1] >= w[0] {
            return Err(Error::InvalidInput(
                "epsilon sequence must be strictly decreasing".into(),
            ));
        }
    }
    if eps_sequence[0] >= 1.0 || *eps_sequence.last().unwrap() <= 0.0 {
        return Err(Error::InvalidInput(
            "epsilon sequence must lie in (0, 1)".into(),
        ));
    }
    for &e in eps_sequence {
        if m.kappa(e) <= 0.0 {
            return Err(Error::ModulusInvalid(format!(
                "{}: kappa({e}) = {} is not positive",
                m.name,
                m.kappa(e)
            )));
        }
    }
    let integrals: Vec<f64> = eps_sequence
        .iter()
        .map(|&e| reciprocal_kappa_integral(m, e, 1.0, quad_tol))
        .collect::<Result<_>>()?;
    let growth_per_decade: Vec<f64> = integrals
        .windows(2)
        .zip(eps_sequence.windows(2))
        .map(|(di, de)| (di[1] - di[0]) / (de[0] / de[1]).log10())
        .collect();
    let verdict = match growth_per_decade.last() {
        Some(&g) if g >= growth_floor => OsgoodVerdict::Divergent,
        Some(_) => OsgoodVerdict::Convergent,
        // A single ε gives no growth information; fall back on the integral
        // being large relative to the floor.
        None => {
            if integrals[0] >= growth_floor {
                OsgoodVerdict::Divergent
            } else {
                OsgoodVerdict::Convergent
            }
        }
    };
    Ok(OsgoodEvidence {
        modulus: m.name.clone(),
        eps: eps_sequence.to_vec(),
        integrals,
        growth_per_decade,
        growth_floor,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bundled() -> Vec<ConcaveModulus> {
        vec![
            ConcaveModulus::linear(),
            ConcaveModulus::log_modulus(),
            ConcaveModulus::log_log_modulus(),
            ConcaveModulus::hoelder_three_quarter(),
        ]
    }

    #[test]
    fn bundled_moduli_validate() {
        for m in bundled() {
            m.validate(1e-12).unwrap_or_else(|e| panic!("{e}"));
        }
    }

    #[test]
    fn kappa_zero_is_exact_and_chord_is_used_below_floor() {
        let m = ConcaveModulus::log_modulus();
        assert_eq!(m.kappa(0.0), 0.0);
        assert_eq!(m.kappa(-1.0), 0.0);
        let q = 1e-310;
        let v = m.kappa(q);
        assert!(v > 0.0 && v.is_finite());
    }

    #[test]
    fn log_modulus_joint_is_continuous() {
        let m = ConcaveModulus::log_modulus();
        let q = (-1.0_f64).exp();
        assert!((m.kappa(q * (1.0 - 1e-12)) - m.kappa(q * (1.0 + 1e-12))).abs() < 1e-12);
    }

    #[test]
    fn linear_tail_integral_matches_log() {
        let m = ConcaveModulus::linear();
        let i = reciprocal_kappa_integral(&m, 1e-4, 1.0, 1e-10).unwrap();
        assert!((i - 4.0 * 10f64.ln()).abs() < 1e-8, "I = {i}");
    }

    #[test]
    fn hoelder_tail_integral_matches_closed_form() {
        let m = ConcaveModulus::hoelder_three_quarter();
        let i = reciprocal_kappa_integral(&m, 1e-4, 1.0, 1e-10).unwrap();
        assert!((i - 4.0 * (1.0 - 0.1)).abs() < 1e-8, "I = {i}");
    }

    #[test]
    fn log_modulus_tail_integral_matches_antiderivative() {
        // For ε < 1/e: I(ε) = ln ln(1/ε) + e − 1.
        let m = ConcaveModulus::log_modulus();
        for eps in [1e-3, 1e-6, 1e-9] {
            let want = (1.0f64 / eps).ln().ln() + std::f64::consts::E - 1.0;
            let got = reciprocal_kappa_integral(&m, eps, 1.0, 1e-10).unwrap();
            assert!((got - want).abs() < 1e-8, "eps {eps}: {got} vs {want}");
        }
    }

    #[test]
    fn classifier_separates_bundled_moduli() {
        let eps = default_eps_sequence();
        let verdicts: Vec<_> = bundled()
            .iter()
            .map(|m| check_osgood(m, &eps).unwrap().verdict)
            .collect();
        assert_eq!(
            verdicts,
            vec![
                OsgoodVerdict::Divergent,
                OsgoodVerdict::Divergent,
                OsgoodVerdict::Divergent,
                OsgoodVerdict::Convergent,
            ]
        );
    }

    #[test]
    fn log_modulus_growth_per_squaring_is_ln2() {
        // Squaring 1/ε adds ln 2 to I for the log modulus.
        let m = ConcaveModulus::log_modulus();
        let i1 = reciprocal_kappa_integral(&m, 1e-6, 1.0, 1e-10).unwrap();
        let i2 = reciprocal_kappa_integral(&m, 1e-12, 1.0, 1e-10).unwrap();
        assert!((i2 - i1 - 2f64.ln()).abs() < 1e-7, "delta = {}", i2 - i1);
    }

    #[test]
    fn classifier_rejects_bad_sequences() {
        let m = ConcaveModulus::linear();
        assert!(check_osgood(&m, &[]).is_err());
        assert!(check_osgood(&m, &[1e-2, 1e-2]).is_err());
        assert!(check_osgood(&m, &[2.0, 1e-3]).is_err());
    }

    #[test]
    fn vanishing_kappa_is_reported() {
        let m = ConcaveModulus::new(
            "broken",
            Arc::new(|q| if q < 0.5 { 0.0 } else { q }),
            Lambda::Constant(1.0),
            None,
            OsgoodClass::Divergent,
            ConcavityMode::Kappa,
            Vec::new(),
        );
        assert!(matches!(
            check_osgood(&m, &[1e-2, 1e-4]),
            Err(Error::ModulusInvalid(_))
        ));
    }

    #[test]
    fn lambda_step_lookup_and_sup() {
        let l = Lambda::steps(vec![(0.0, 1.0), (0.5, 3.0), (0.75, 2.0)]).unwrap();
        assert_eq!(l.at(0.0), 1.0);
        assert_eq!(l.at(0.49), 1.0);
        assert_eq!(l.at(0.5), 3.0);
        assert_eq!(l.at(0.9), 2.0);
        assert_eq!(l.sup(), 3.0);
        assert!(Lambda::steps(vec![(0.1, 1.0)]).is_err());
        assert!(Lambda::constant(-1.0).is_err());
    }

    #[test]
    fn kappa_squared_over_q_mode_validates() {
        // κ(q) = √q is convex, but κ²/q = 1 is (weakly) concave: the second
        // branch of the assumption accepts it.
        let m = ConcaveModulus::new(
            "sqrt",
            Arc::new(|q: f64| q.sqrt()),
            Lambda::Constant(1.0),
            Some((1.0, 1.0)),
            OsgoodClass::Convergent,
            ConcavityMode::KappaSquaredOverQ,
            Vec::new(),
        );
        m.validate(1e-12).unwrap();
    }
}

//! Built-in coefficient sets and moduli, selected by name plus a flat
//! parameter table. User-defined coefficients enter through the library API;
//! there is no expression parser.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::coeffs::{CoefficientSet, DiffusionFn, DriftFn, InitialLaw, JumpCoeffFn};
use crate::error::{Error, Result};
use crate::modulus::{ConcaveModulus, Lambda};
use crate::noise::{JumpMeasure, LevyModel};

/// Flat `name -> value` parameter table from a config file or the API.
pub type Params = BTreeMap<String, f64>;

/// A named, ready-to-run model with an optional analytic mean oracle.
#[derive(Clone)]
pub struct Scenario {
    pub name: String,
    pub coeffs: CoefficientSet,
    /// Exact `E X(t)` when known in closed form.
    pub analytic_mean: Option<Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>>,
}

impl std::fmt::Debug for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Scenario")
            .field("name", &self.name)
            .field("coeffs", &self.coeffs)
            .field("has_analytic_mean", &self.analytic_mean.is_some())
            .finish()
    }
}

pub const SCENARIO_SUMMARIES: &[(&str, &str)] = &[
    (
        "zero",
        "all coefficients zero; the fixed point is the initial value",
    ),
    (
        "deterministic-exp",
        "b(y) = a y with no noise; solution xi e^{a t} (params: a, xi)",
    ),
    (
        "ou-jump",
        "b(y) = -a y, constant sigma, F(t,y,x) = x with one jump atom; \
         analytic mean xi e^{-a t} (params: a, sigma, jump_mark, jump_mass, cutoff, xi)",
    ),
    (
        "log-modulus-drift",
        "scalar drift whose squared differences follow q ln(1/q) exactly near 0 \
         (params: scale, xi)",
    ),
    (
        "hoelder-negative-control",
        "b(y) = |y|^{1/4} deliberately declared Lipschitz; fails the \
         coefficient-condition verifier (params: xi)",
    ),
];

pub const MODULUS_SUMMARIES: &[(&str, &str)] = &[
    (
        "linear",
        "kappa(q) = q, the Lipschitz case (params: lambda)",
    ),
    (
        "log",
        "kappa(q) = q ln(1/q) up to 1/e, constant beyond (params: lambda)",
    ),
    (
        "log-log",
        "kappa(q) = q ln(1/q) ln ln(1/q) up to its maximum, constant beyond (params: lambda)",
    ),
    (
        "hoelder-3/4",
        "kappa(q) = q^{3/4}: concave but not Osgood — negative control (params: lambda)",
    ),
];

pub fn scenario_names() -> Vec<&'static str> {
    SCENARIO_SUMMARIES.iter().map(|(n, _)| *n).collect()
}

pub fn modulus_names() -> Vec<&'static str> {
    MODULUS_SUMMARIES.iter().map(|(n, _)| *n).collect()
}

/// Pulls declared parameters and rejects unknown ones by name.
struct ParamReader<'a> {
    params: &'a Params,
    known: Vec<&'static str>,
}

impl<'a> ParamReader<'a> {
    fn new(params: &'a Params) -> Self {
        Self {
            params,
            known: Vec::new(),
        }
    }

    fn get(&mut self, name: &'static str, default: f64) -> f64 {
        self.known.push(name);
        self.params.get(name).copied().unwrap_or(default)
    }

    fn finish(self, what: &str) -> Result<()> {
        let unknown: Vec<&String> = self
            .params
            .keys()
            .filter(|k| !self.known.contains(&k.as_str()))
            .collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!(
                "unknown parameter(s) {unknown:?} for {what}; known: {:?}",
                self.known
            )))
        }
    }
}

fn zero_vec_fn() -> DriftFn {
    Arc::new(|_t, _y, out: &mut [f64]| out.fill(0.0))
}

fn zero_jump_fn() -> JumpCoeffFn {
    Arc::new(|_t, _y, _x, out: &mut [f64]| out.fill(0.0))
}

/// Build a bundled modulus by name. The only parameter is a constant
/// `lambda` weight (default 1).
pub fn build_modulus(name: &str, params: &Params) -> Result<ConcaveModulus> {
    let mut reader = ParamReader::new(params);
    let lambda = reader.get("lambda", 1.0);
    reader.finish(&format!("modulus `{name}`"))?;
    let base = match name {
        "linear" => ConcaveModulus::linear(),
        "log" => ConcaveModulus::log_modulus(),
        "log-log" => ConcaveModulus::log_log_modulus(),
        "hoelder-3/4" => ConcaveModulus::hoelder_three_quarter(),
        other => {
            return Err(Error::InvalidInput(format!(
                "unknown modulus `{other}`; known: {:?}",
                modulus_names()
            )))
        }
    };
    Ok(base.with_lambda(Lambda::constant(lambda)?))
}

/// Build a bundled scenario by name.
pub fn build_scenario(name: &str, params: &Params) -> Result<Scenario> {
    match name {
        "zero" => zero_scenario(params),
        "deterministic-exp" => deterministic_exp(params),
        "ou-jump" => ou_jump(params),
        "log-modulus-drift" => log_modulus_drift(params),
        "hoelder-negative-control" => hoelder_negative_control(params),
        other => Err(Error::InvalidInput(format!(
            "unknown scenario `{other}`; known: {:?}",
            scenario_names()
        ))),
    }
}

fn zero_scenario(params: &Params) -> Result<Scenario> {
    let mut reader = ParamReader::new(params);
    let xi = reader.get("xi", 1.0);
    let horizon = reader.get("horizon", 1.0);
    reader.finish("scenario `zero`")?;
    let coeffs = CoefficientSet::new(
        1,
        horizon,
        zero_vec_fn(),
        zero_vec_fn(),
        zero_jump_fn(),
        InitialLaw::PointMass(vec![xi]),
        LevyModel::new(JumpMeasure::empty(1.0, 1)?, 0),
        ConcaveModulus::linear(),
    )?;
    Ok(Scenario {
        name: "zero".into(),
        coeffs,
        analytic_mean: Some(Arc::new(move |_t| vec![xi])),
    })
}

fn deterministic_exp(params: &Params) -> Result<Scenario> {
    let mut reader = ParamReader::new(params);
    let a = reader.get("a", 1.0);
    let xi = reader.get("xi", 1.0);
    let horizon = reader.get("horizon", 1.0);
    reader.finish("scenario `deterministic-exp`")?;
    let drift: DriftFn = Arc::new(move |_t, y: &[f64], out: &mut [f64]| out[0] = a * y[0]);
    // |a Δy|² = a² |Δy|²: the linear modulus with λ = a² matches exactly.
    let lambda = if a == 0.0 { 1.0 } else { a * a };
    let coeffs = CoefficientSet::new(
        1,
        horizon,
        drift,
        zero_vec_fn(),
        zero_jump_fn(),
        InitialLaw::PointMass(vec![xi]),
        LevyModel::new(JumpMeasure::empty(1.0, 1)?, 0),
        ConcaveModulus::linear().with_lambda(Lambda::constant(lambda)?),
    )?;
    Ok(Scenario {
        name: "deterministic-exp".into(),
        coeffs,
        analytic_mean: Some(Arc::new(move |t| vec![xi * (a * t).exp()])),
    })
}

fn ou_jump(params: &Params) -> Result<Scenario> {
    let mut reader = ParamReader::new(params);
    let a = reader.get("a", 1.0);
    let sigma = reader.get("sigma", 0.3);
    let jump_mark = reader.get("jump_mark", 0.1);
    let jump_mass = reader.get("jump_mass", 1.0);
    let cutoff = reader.get("cutoff", (2.0 * jump_mark.abs()).max(0.5));
    let xi = reader.get("xi", 1.0);
    let horizon = reader.get("horizon", 1.0);
    reader.finish("scenario `ou-jump`")?;

    let measure = if jump_mass > 0.0 {
        JumpMeasure::atomic(vec![(vec![jump_mark], jump_mass)], cutoff)?
    } else {
        JumpMeasure::empty(cutoff, 1)?
    };
    let drift: DriftFn = Arc::new(move |_t, y: &[f64], out: &mut [f64]| out[0] = -a * y[0]);
    let diffusion: DiffusionFn = Arc::new(move |_t, _y, out: &mut [f64]| out[0] = sigma);
    let jump: JumpCoeffFn = Arc::new(|_t, _y, x: &[f64], out: &mut [f64]| out[0] = x[0]);
    // Drift is the only state-dependent coefficient; λ = a² makes the
    // condition an identity.
    let lambda = if a == 0.0 { 1.0 } else { a * a };
    let coeffs = CoefficientSet::new(
        1,
        horizon,
        drift,
        diffusion,
        jump,
        InitialLaw::PointMass(vec![xi]),
        LevyModel::new(measure, 1),
        ConcaveModulus::linear().with_lambda(Lambda::constant(lambda)?),
    )?;
    Ok(Scenario {
        name: "ou-jump".into(),
        coeffs,
        // Compensated jumps and the Brownian integral are mean-zero, so the
        // mean follows the deterministic flow.
        analytic_mean: Some(Arc::new(move |t| vec![xi * (-a * t).exp()])),
    })
}

fn log_modulus_drift(params: &Params) -> Result<Scenario> {
    let mut reader = ParamReader::new(params);
    let scale = reader.get("scale", 1.0);
    let xi = reader.get("xi", 0.25);
    let horizon = reader.get("horizon", 1.0);
    reader.finish("scenario `log-modulus-drift`")?;

    // g(u) = sqrt(kappa(u²)) with the log modulus: concave, increasing,
    // g(0) = 0, capped at u* = 1/e. For pairs on one side of the origin
    // |Δb| ≤ scale·g(|Δy|) holds by subadditivity with equality against the
    // pair (u, 0); opposite-sign pairs cost at most a factor 2 in g, so
    // λ = 4 scale² covers every pair while the κ-shape stays exactly
    // attained near the origin.
    let modulus = ConcaveModulus::log_modulus();
    let u_star = (-1.0f64).exp();
    let g = {
        let m = modulus.clone();
        move |u: f64| m.kappa(u * u).sqrt()
    };
    let drift: DriftFn = Arc::new(move |_t, y: &[f64], out: &mut [f64]| {
        let u = y[0].abs().min(u_star);
        out[0] = -scale * y[0].signum() * g(u);
    });
    let lambda = 4.0 * scale * scale;
    let coeffs = CoefficientSet::new(
        1,
        horizon,
        drift,
        zero_vec_fn(),
        zero_jump_fn(),
        InitialLaw::PointMass(vec![xi]),
        LevyModel::new(JumpMeasure::empty(1.0, 1)?, 0),
        modulus.with_lambda(Lambda::constant(lambda)?),
    )?;
    Ok(Scenario {
        name: "log-modulus-drift".into(),
        coeffs,
        analytic_mean: None,
    })
}

fn hoelder_negative_control(params: &Params) -> Result<Scenario> {
    let mut reader = ParamReader::new(params);
    let xi = reader.get("xi", 0.0);
    let horizon = reader.get("horizon", 1.0);
    reader.finish("scenario `hoelder-negative-control`")?;
    let drift: DriftFn = Arc::new(|_t, y: &[f64], out: &mut [f64]| out[0] = y[0].abs().powf(0.25));
    let coeffs = CoefficientSet::new(
        1,
        horizon,
        drift,
        zero_vec_fn(),
        zero_jump_fn(),
        InitialLaw::PointMass(vec![xi]),
        LevyModel::new(JumpMeasure::empty(1.0, 1)?, 0),
        // Deliberately misdeclared as Lipschitz: this scenario exists so the
        // verifier has a guaranteed failure fixture.
        ConcaveModulus::linear(),
    )?;
    Ok(Scenario {
        name: "hoelder-negative-control".into(),
        coeffs,
        analytic_mean: None,
    })
}

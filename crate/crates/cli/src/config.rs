//! Experiment configuration: TOML schema, defaults, and non-fail-fast
//! validation.
//!
//! ```toml
//! scenario = "ou-jump"
//! paths = 1000
//! seed = 42
//! output_dir = "out"        # optional
//! modulus = "log"           # optional override of the scenario's modulus
//!
//! [params]                  # scenario parameters (numbers)
//! a = 1.0
//!
//! [modulus_params]
//! lambda = 1.0
//!
//! [grid]
//! horizon = 1.0
//! steps = 1024              # power of two
//!
//! [tolerances]
//! solver = 1e-6
//! quadrature = 1e-9
//!
//! [diagnostics]
//! assumption1 = true
//! osgood = true
//! cauchy = true
//! moment_bound = true
//! uniqueness = false
//! mean_oracle = false
//! stability_epsilons = [0.5, 1.0]
//! stability_gap = 1e-3      # optional; derived from the certificate if absent
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use levy_sde::scenarios::{
    build_modulus, build_scenario, modulus_names, scenario_names, Params, Scenario,
};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub horizon: f64,
    pub steps: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            horizon: 1.0,
            steps: 1024,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub solver: f64,
    pub quadrature: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            solver: 1e-6,
            quadrature: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Diagnostics {
    pub assumption1: bool,
    pub osgood: bool,
    pub cauchy: bool,
    pub moment_bound: bool,
    pub uniqueness: bool,
    pub mean_oracle: bool,
    pub stability_epsilons: Vec<f64>,
    pub stability_gap: Option<f64>,
}

impl Default for Diagnostics {
    fn default() -> Self {
        Self {
            assumption1: true,
            osgood: true,
            cauchy: true,
            moment_bound: true,
            uniqueness: false,
            mean_oracle: false,
            stability_epsilons: Vec::new(),
            stability_gap: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: String,
    #[serde(default)]
    pub params: Params,
    /// Override the scenario's declared modulus.
    #[serde(default)]
    pub modulus: Option<String>,
    #[serde(default)]
    pub modulus_params: Params,
    #[serde(default)]
    pub grid: GridConfig,
    pub paths: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub max_iter: Option<usize>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub diagnostics: Diagnostics,
    #[serde(default)]
    pub output_dir: Option<String>,
}

/// All problems found in one pass, each naming its field.
#[derive(Debug)]
pub struct ConfigErrors(pub Vec<String>);

impl std::fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for issue in &self.0 {
            writeln!(f, "- {issue}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

impl ExperimentConfig {
    /// Parse and fully validate; reports every violation, not just the first.
    pub fn load(path: &Path) -> Result<Self, ConfigErrors> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigErrors(vec![format!("cannot read {}: {e}", path.display())]))?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigErrors> {
        let config: Self =
            toml::from_str(text).map_err(|e| ConfigErrors(vec![format!("parse error: {e}")]))?;
        let issues = config.validate();
        if issues.is_empty() {
            Ok(config)
        } else {
            Err(ConfigErrors(issues))
        }
    }

    /// Collected invariant violations, empty when valid.
    pub fn validate(&self) -> Vec<String> {
        let mut issues = Vec::new();
        if !(self.grid.horizon.is_finite() && self.grid.horizon > 0.0) {
            issues.push(format!(
                "grid.horizon: must be a positive finite real, got {}",
                self.grid.horizon
            ));
        }
        if self.grid.steps == 0 || !self.grid.steps.is_power_of_two() {
            issues.push(format!(
                "grid.steps: must be a power of two, got {}",
                self.grid.steps
            ));
        }
        if self.paths < 2 {
            issues.push(format!("paths: must be >= 2, got {}", self.paths));
        }
        if !self.tolerances.solver.is_finite() || self.tolerances.solver <= 0.0 {
            issues.push(format!(
                "tolerances.solver: must be > 0, got {}",
                self.tolerances.solver
            ));
        }
        if !self.tolerances.quadrature.is_finite() || self.tolerances.quadrature <= 0.0 {
            issues.push(format!(
                "tolerances.quadrature: must be > 0, got {}",
                self.tolerances.quadrature
            ));
        }
        for (i, eps) in self.diagnostics.stability_epsilons.iter().enumerate() {
            if !eps.is_finite() || *eps <= 0.0 {
                issues.push(format!(
                    "diagnostics.stability_epsilons[{i}]: must be > 0, got {eps}"
                ));
            }
        }
        if let Some(gap) = self.diagnostics.stability_gap {
            if !(gap >= 0.0 && gap.is_finite()) {
                issues.push(format!(
                    "diagnostics.stability_gap: must be >= 0, got {gap}"
                ));
            }
        }
        if !scenario_names().contains(&self.scenario.as_str()) {
            issues.push(format!(
                "scenario: unknown `{}`; known: {:?}",
                self.scenario,
                scenario_names()
            ));
        } else if let Err(e) = self.build_scenario_unchecked() {
            issues.push(format!("params: {e}"));
        }
        if let Some(name) = &self.modulus {
            if !modulus_names().contains(&name.as_str()) {
                issues.push(format!(
                    "modulus: unknown `{name}`; known: {:?}",
                    modulus_names()
                ));
            } else if let Err(e) = build_modulus(name, &self.modulus_params) {
                issues.push(format!("modulus_params: {e}"));
            }
        }
        issues
    }

    fn build_scenario_unchecked(&self) -> levy_sde::Result<Scenario> {
        // The grid section owns the horizon; it is injected as the scenario's
        // horizon parameter.
        let mut params = self.params.clone();
        params.insert("horizon".into(), self.grid.horizon);
        build_scenario(&self.scenario, &params)
    }

    /// Build the scenario with the modulus override applied.
    pub fn build(&self) -> levy_sde::Result<Scenario> {
        let mut scenario = self.build_scenario_unchecked()?;
        if let Some(name) = &self.modulus {
            let modulus = build_modulus(name, &self.modulus_params)?;
            scenario.coeffs = scenario.coeffs.with_modulus(modulus);
        }
        Ok(scenario)
    }

    /// Canonical TOML echo for the run manifest.
    pub fn canonical_toml(&self) -> String {
        toml::to_string_pretty(self).unwrap_or_else(|e| format!("# serialization failed: {e}"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "scenario = \"zero\"\npaths = 8\n";

    #[test]
    fn minimal_config_gets_defaults() {
        let c = ExperimentConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(c.tolerances.solver, 1e-6);
        assert_eq!(c.tolerances.quadrature, 1e-9);
        assert_eq!(c.grid.steps, 1024);
        assert_eq!(c.seed, 0);
        assert!(c.diagnostics.assumption1);
        assert!(c.diagnostics.stability_epsilons.is_empty());
    }

    #[test]
    fn non_power_of_two_steps_names_the_field() {
        let toml = "scenario = \"zero\"\npaths = 8\n[grid]\nhorizon = 1.0\nsteps = 1000\n";
        let err = ExperimentConfig::from_toml(toml).unwrap_err();
        assert!(err.0.iter().any(|i| i.contains("grid.steps")), "{err}");
    }

    #[test]
    fn unknown_scenario_lists_the_registry() {
        let toml = "scenario = \"foo\"\npaths = 8\n";
        let err = ExperimentConfig::from_toml(toml).unwrap_err();
        assert!(
            err.0
                .iter()
                .any(|i| i.contains("ou-jump") && i.contains("foo")),
            "{err}"
        );
    }

    #[test]
    fn multiple_violations_are_all_reported() {
        let toml = "scenario = \"foo\"\npaths = 1\n[grid]\nhorizon = -2.0\nsteps = 7\n\
                    [tolerances]\nsolver = 0.0\n";
        let err = ExperimentConfig::from_toml(toml).unwrap_err();
        assert!(err.0.len() >= 4, "expected >= 4 issues, got {err}");
    }

    #[test]
    fn unknown_params_fail_validation() {
        let toml = "scenario = \"ou-jump\"\npaths = 8\n[params]\nbogus = 1.0\n";
        let err = ExperimentConfig::from_toml(toml).unwrap_err();
        assert!(err.0.iter().any(|i| i.contains("bogus")), "{err}");
    }

    #[test]
    fn modulus_override_is_applied() {
        let toml = "scenario = \"zero\"\npaths = 8\nmodulus = \"log\"\n";
        let c = ExperimentConfig::from_toml(toml).unwrap();
        let sc = c.build().unwrap();
        assert_eq!(sc.coeffs.modulus.name(), "log");
    }

    #[test]
    fn grid_horizon_reaches_the_scenario() {
        let toml = "scenario = \"zero\"\npaths = 8\n[grid]\nhorizon = 2.5\nsteps = 64\n";
        let c = ExperimentConfig::from_toml(toml).unwrap();
        let sc = c.build().unwrap();
        assert_eq!(sc.coeffs.horizon(), 2.5);
    }
}

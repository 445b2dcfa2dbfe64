//! Experiment configuration: JSON schema, scenario defaults and cross-field
//! validation.

use std::fmt;
use std::path::{Path, PathBuf};

use nonlocal_aggregation::diagnostics::{LpExponent, TestFunction};
use nonlocal_aggregation::solver::{
    required_half_width, InitialDatum, SolverConfig, DEFAULT_BOUNDARY_TOL, DEFAULT_CFL,
};
use nonlocal_aggregation::{make_kernel, Grid64, Kernel64, KernelFamily};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Scenario {
    Decay,
    Rarefaction,
    EpsilonLimit,
    Rescale,
    Particles,
    Validate,
}

impl Scenario {
    pub const ALL: [Scenario; 6] = [
        Scenario::Decay,
        Scenario::Rarefaction,
        Scenario::EpsilonLimit,
        Scenario::Rescale,
        Scenario::Particles,
        Scenario::Validate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Decay => "decay",
            Scenario::Rarefaction => "rarefaction",
            Scenario::EpsilonLimit => "epsilon_limit",
            Scenario::Rescale => "rescale",
            Scenario::Particles => "particles",
            Scenario::Validate => "validate",
        }
    }

    /// Whether the scenario integrates the PDE with the configured grid.
    fn uses_solver(self) -> bool {
        self != Scenario::Validate
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    pub family: KernelFamily,
    pub amplitude: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// `L`; the domain is `[-L, L]`.
    pub half_width: f64,
    /// `N`.
    pub cells: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    /// One run per entry; entries may run concurrently.
    pub epsilon: Vec<f64>,
    pub cfl: f64,
    pub t_end: f64,
    pub checkpoints: Vec<f64>,
    pub boundary_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsSpec {
    pub p_list: Vec<LpExponent>,
    pub fit_window: [f64; 2],
    /// Time at which the ε-sweep is compared.
    pub uniformity_time: f64,
    pub lambdas: Vec<f64>,
    pub t0: f64,
    pub test_functions: Vec<TestFunction<f64>>,
    /// Write `profile_t*.csv` at every checkpoint.
    pub dump_profiles: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParticleSpec {
    pub count: usize,
    /// The cross-check repeats with `count · refinement` particles.
    pub refinement: usize,
    /// Independent ensembles per size; seeds are `seed, seed+1, ...`.
    pub ensembles: usize,
    pub dt_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSpec {
    pub amplitude: f64,
    pub epsilon: f64,
    pub time: f64,
    pub half_width: f64,
    pub cells: usize,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateSpec {
    /// Grid sizes for the sign-kernel identity; each is double the previous.
    pub identity_cells: Vec<usize>,
    pub identity_half_width: f64,
    pub oracle: OracleSpec,
    /// Sample points per time for the closed-form profile checks.
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub kernel: KernelConfig,
    pub initial: InitialDatum<f64>,
    pub grid: GridConfig,
    pub solver: SolverSpec,
    pub diagnostics: DiagnosticsSpec,
    pub particles: ParticleSpec,
    pub validate: ValidateSpec,
    pub output: PathBuf,
    pub seed: u64,
}

const STANDARD_CHECKPOINTS: [f64; 10] = [1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0, 200.0, 500.0, 1000.0];

fn standard_checkpoints(t_end: f64) -> Vec<f64> {
    STANDARD_CHECKPOINTS.iter().copied().filter(|&t| t <= t_end).collect()
}

impl ExperimentConfig {
    /// Fully materialised defaults for `scenario`.
    pub fn defaults(scenario: Scenario) -> Self {
        let (epsilon, t_end, half_width, cells): (Vec<f64>, f64, f64, usize) = match scenario {
            Scenario::Decay => (vec![0.1, 0.0], 1000.0, 1600.0, 1 << 14),
            Scenario::Rarefaction => (vec![0.5], 1000.0, 1600.0, 1 << 14),
            Scenario::EpsilonLimit => (vec![0.5, 0.1, 0.02, 0.0], 500.0, 800.0, 1 << 13),
            Scenario::Rescale => (vec![0.1], 320.0, 500.0, 1 << 13),
            Scenario::Particles => (vec![0.0], 50.0, 100.0, 1 << 14),
            Scenario::Validate => (vec![1.0, 0.1], 1000.0, 1600.0, 1 << 14),
        };
        let t0 = 5.0;
        let lambdas = vec![1.0, 4.0, 16.0, 64.0];
        let checkpoints = match scenario {
            Scenario::Rescale => lambdas.iter().map(|l| l * t0).collect(),
            _ => standard_checkpoints(t_end),
        };
        Self {
            scenario,
            kernel: KernelConfig {
                family: KernelFamily::ExponentialBump,
                amplitude: 2.0,
                beta: 0.5,
            },
            initial: InitialDatum::Gaussian {
                center: 0.0,
                variance: 1.0,
            },
            grid: GridConfig { half_width, cells },
            solver: SolverSpec {
                epsilon,
                cfl: DEFAULT_CFL,
                t_end,
                checkpoints,
                boundary_tol: DEFAULT_BOUNDARY_TOL,
            },
            diagnostics: DiagnosticsSpec {
                p_list: vec![LpExponent::ONE, LpExponent::TWO, LpExponent::INF],
                fit_window: [10.0, 1000.0],
                uniformity_time: 500.0,
                lambdas,
                t0,
                test_functions: vec![
                    TestFunction::Bump {
                        center: 0.0,
                        width: 3.0,
                    },
                    TestFunction::GaussianTest {
                        center: 0.5,
                        width: 0.5,
                    },
                ],
                dump_profiles: false,
            },
            particles: ParticleSpec {
                count: 10_000,
                refinement: 4,
                ensembles: 4,
                dt_max: 0.05,
            },
            validate: ValidateSpec {
                identity_cells: vec![1 << 10, 1 << 11, 1 << 12],
                identity_half_width: 10.0,
                oracle: OracleSpec {
                    amplitude: 1.0,
                    epsilon: 0.5,
                    time: 5.0,
                    half_width: 12.0,
                    cells: 1000,
                    tolerance: 1e-4,
                },
                samples: 20_001,
            },
            output: PathBuf::from("output").join(scenario.name()),
            seed: 0,
        }
    }

    /// Parses a JSON document, layering it over the scenario defaults.
    /// `scenario` overrides (or supplies) the document's own `scenario` field.
    pub fn from_json_str(text: &str, scenario: Option<Scenario>) -> Result<Self, CliError> {
        let mut user: Value = serde_json::from_str(text).map_err(|e| CliError::Schema {
            field: ".".into(),
            message: e.to_string(),
        })?;
        let obj = user.as_object_mut().ok_or_else(|| CliError::Schema {
            field: ".".into(),
            message: "top level must be a JSON object".into(),
        })?;
        let scenario = match scenario {
            Some(s) => s,
            None => {
                let raw = obj.get("scenario").cloned().ok_or_else(|| CliError::Schema {
                    field: "scenario".into(),
                    message: "missing field".into(),
                })?;
                serde_json::from_value(raw).map_err(|e| CliError::Schema {
                    field: "scenario".into(),
                    message: e.to_string(),
                })?
            }
        };
        obj.insert(
            "scenario".into(),
            serde_json::to_value(scenario).expect("enum serialises"),
        );
        let mut merged = serde_json::to_value(Self::defaults(scenario)).expect("defaults serialise");
        overlay(&mut merged, user);
        let cfg: Self = serde_path_to_error::deserialize(merged).map_err(|e| CliError::Schema {
            field: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn kernel(&self) -> Result<Kernel64, CliError> {
        let k = &self.kernel;
        make_kernel(k.family, k.amplitude, k.beta).map_err(|e| rule("kernel smallness", e.to_string()))
    }

    pub fn grid(&self) -> Result<Grid64, CliError> {
        Grid64::new(self.grid.half_width, self.grid.cells).map_err(|e| rule("grid", e.to_string()))
    }

    pub fn solver_config(&self, epsilon: f64) -> Result<SolverConfig<f64>, CliError> {
        let s = &self.solver;
        let mut cfg = SolverConfig::new(epsilon, s.t_end, s.checkpoints.clone())
            .and_then(|c| c.with_cfl(s.cfl))
            .map_err(|e| rule("solver", e.to_string()))?;
        cfg.boundary_tol = s.boundary_tol;
        Ok(cfg)
    }

    /// Cross-field rules; each error names the rule that failed.
    pub fn validate(&self) -> Result<(), CliError> {
        let kernel = self.kernel()?;
        let s = &self.solver;
        if s.epsilon.is_empty() {
            return Err(rule("epsilon list", "needs at least one value"));
        }
        if let Some(e) = s.epsilon.iter().find(|e| !(**e >= 0.0 && e.is_finite())) {
            return Err(rule("epsilon list", format!("ε must be finite and ≥ 0, got {e}")));
        }
        if !(s.t_end > 0.0 && s.t_end.is_finite()) {
            return Err(rule("t_end", "must be positive"));
        }
        if let Some(t) = s.checkpoints.iter().find(|&&t| !(t > 0.0 && t <= s.t_end)) {
            return Err(rule("checkpoints", format!("{t} outside (0, t_end = {}]", s.t_end)));
        }
        if s.checkpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(rule("checkpoints", "must be strictly increasing"));
        }
        for &e in &s.epsilon {
            self.solver_config(e)?;
        }
        for p in &self.diagnostics.p_list {
            p.validate().map_err(|e| rule("p list", e.to_string()))?;
        }
        let [lo, hi] = self.diagnostics.fit_window;
        if !(lo > 0.0 && hi > lo) {
            return Err(rule("fit window", format!("need 0 < lo < hi, got [{lo}, {hi}]")));
        }
        if self.scenario.uses_solver() {
            let grid = self.grid()?;
            let need = required_half_width(kernel.amplitude(), s.t_end, &self.initial);
            if grid.half_width() < need {
                return Err(rule(
                    "margin",
                    format!(
                        "L = {} < 1.5·(A·t_end/2) + initial support radius = {need}",
                        grid.half_width()
                    ),
                ));
            }
        }
        match self.scenario {
            Scenario::Decay | Scenario::Rarefaction => self.require_window_checkpoints()?,
            Scenario::EpsilonLimit => {
                if !s.checkpoints.contains(&self.diagnostics.uniformity_time) {
                    return Err(rule("uniformity time", "must be one of the checkpoints"));
                }
            }
            Scenario::Rescale => {
                let d = &self.diagnostics;
                if d.lambdas.is_empty() || d.test_functions.is_empty() {
                    return Err(rule("rescale", "needs λ values and test functions"));
                }
                for &l in &d.lambdas {
                    if !(l > 0.0) || !s.checkpoints.iter().any(|&t| (t - l * d.t0).abs() <= 1e-9 * t) {
                        return Err(rule("rescale", format!("checkpoint λ·t₀ = {} missing", l * d.t0)));
                    }
                }
                for phi in &d.test_functions {
                    phi.validate().map_err(|e| rule("test function", e.to_string()))?;
                }
            }
            Scenario::Particles => {
                if s.epsilon != [0.0] {
                    return Err(rule("particles", "the particle model is inviscid; epsilon must be [0]"));
                }
                if !s.checkpoints.contains(&s.t_end) {
                    return Err(rule("particles", "t_end must be a checkpoint"));
                }
                let p = &self.particles;
                if p.count < 2 || p.refinement < 2 || p.ensembles == 0 || !(p.dt_max > 0.0) {
                    return Err(rule(
                        "particles",
                        "need count ≥ 2, refinement ≥ 2, ensembles ≥ 1, dt_max > 0",
                    ));
                }
            }
            Scenario::Validate => {
                let v = &self.validate;
                if v.identity_cells.len() < 2 || v.identity_cells.windows(2).any(|w| w[1] != 2 * w[0]) {
                    return Err(rule("identity cells", "need ≥ 2 sizes, each double the previous"));
                }
                if v.samples < 16 {
                    return Err(rule("samples", "need at least 16"));
                }
                if s.epsilon.contains(&0.0) {
                    return Err(rule("epsilon list", "closed-form viscous checks need ε > 0"));
                }
                self.require_window_checkpoints()?;
            }
        }
        Ok(())
    }

    fn require_window_checkpoints(&self) -> Result<(), CliError> {
        let [lo, hi] = self.diagnostics.fit_window;
        let inside = self.solver.checkpoints.iter().filter(|&&t| t >= lo && t <= hi).count();
        if inside < 5 {
            return Err(rule(
                "fit window",
                format!("only {inside} checkpoints in [{lo}, {hi}], need 5"),
            ));
        }
        Ok(())
    }
}

fn rule(rule: &'static str, message: impl Into<String>) -> CliError {
    CliError::Rule {
        rule,
        message: message.into(),
    }
}

/// Recursively overlays `user` onto `base`. Objects merge key by key, except
/// tagged objects whose `kind` changes, which are replaced outright.
fn overlay(base: &mut Value, user: Value) {
    match (base, user) {
        (Value::Object(b), Value::Object(u)) => {
            let same_kind = match (b.get("kind"), u.get("kind")) {
                (Some(x), Some(y)) => x == y,
                _ => true,
            };
            if !same_kind {
                *b = u;
                return;
            }
            for (k, v) in u {
                match b.get_mut(&k) {
                    Some(slot) => overlay(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Reads and validates a config file.
pub fn parse_config(path: &Path, scenario: Option<Scenario>) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    ExperimentConfig::from_json_str(&text, scenario)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_materialises_defaults() {
        let cfg = ExperimentConfig::from_json_str(r#"{"scenario": "decay"}"#, None).unwrap();
        assert_eq!(cfg.solver.cfl, 0.4);
        assert_eq!(
            cfg.diagnostics.p_list,
            vec![LpExponent::ONE, LpExponent::TWO, LpExponent::INF]
        );
        assert_eq!(cfg, ExperimentConfig::defaults(Scenario::Decay));
    }

    #[test]
    fn every_scenario_default_is_valid() {
        for s in Scenario::ALL {
            ExperimentConfig::defaults(s)
                .validate()
                .unwrap_or_else(|e| panic!("{s}: {e}"));
        }
    }

    #[test]
    fn kernel_smallness_is_reported() {
        let text = r#"{"kernel": {"family": "ExponentialBump", "amplitude": 1.0, "beta": 0.6}}"#;
        let err = ExperimentConfig::from_json_str(text, Some(Scenario::Decay)).unwrap_err();
        assert!(err.to_string().contains("‖V_x‖₁ = 1.2 ≥ A"), "{err}");
    }

    #[test]
    fn margin_rule_is_reported() {
        let text = r#"{"scenario": "decay", "solver": {"t_end": 100, "checkpoints": [10, 20, 50, 80, 100]},
                       "grid": {"half_width": 50}, "kernel": {"amplitude": 2.0}}"#;
        let err = ExperimentConfig::from_json_str(text, None).unwrap_err();
        assert!(matches!(err, CliError::Rule { rule: "margin", .. }), "{err}");
        assert!(err.to_string().contains("1.5·(A·t_end/2)"));
    }

    #[test]
    fn schema_errors_carry_the_field_path() {
        let err = ExperimentConfig::from_json_str(r#"{"solver": {"cfl": "fast"}}"#, Some(Scenario::Decay)).unwrap_err();
        match err {
            CliError::Schema { field, .. } => assert_eq!(field, "solver.cfl"),
            other => panic!("{other}"),
        }
        let err = ExperimentConfig::from_json_str(r#"{"solver": {"cfll": 0.3}}"#, Some(Scenario::Decay)).unwrap_err();
        assert!(matches!(err, CliError::Schema { .. }), "{err}");
    }

    #[test]
    fn tagged_objects_are_replaced_when_kind_changes() {
        let text = r#"{"initial": {"kind": "Box", "lo": -1.0, "hi": 1.0}}"#;
        let cfg = ExperimentConfig::from_json_str(text, Some(Scenario::Rarefaction)).unwrap();
        assert_eq!(cfg.initial, InitialDatum::Box { lo: -1.0, hi: 1.0 });
    }

    #[test]
    fn epsilon_list_must_be_nonempty() {
        let err = ExperimentConfig::from_json_str(r#"{"solver": {"epsilon": []}}"#, Some(Scenario::EpsilonLimit))
            .unwrap_err();
        assert!(matches!(
            err,
            CliError::Rule {
                rule: "epsilon list",
                ..
            }
        ));
    }

    #[test]
    fn checkpoints_beyond_t_end_are_rejected() {
        let err = ExperimentConfig::from_json_str(r#"{"solver": {"checkpoints": [1, 2000]}}"#, Some(Scenario::Decay))
            .unwrap_err();
        assert!(matches!(
            err,
            CliError::Rule {
                rule: "checkpoints",
                ..
            }
        ));
    }
}

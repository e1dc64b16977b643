use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::control::{ControlFunction, Direction, JensenParams};
use crate::error::{Error, Result};
use crate::hyers::Perturbation;
use crate::talg::Shape;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Matrix,
    Vector,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DirectionSpec {
    Auto,
    Forward,
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckName {
    Jensen,
    Bound,
    JordanHom,
    JordanDer,
    Superstab,
    Spanning,
    T1Linearity,
    ILinearity,
    Uniqueness,
}

impl CheckName {
    pub const ALL: [CheckName; 9] = [
        CheckName::Jensen,
        CheckName::Bound,
        CheckName::JordanHom,
        CheckName::JordanDer,
        CheckName::Superstab,
        CheckName::Spanning,
        CheckName::T1Linearity,
        CheckName::ILinearity,
        CheckName::Uniqueness,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CheckName::Jensen => "jensen",
            CheckName::Bound => "bound",
            CheckName::JordanHom => "jordan_hom",
            CheckName::JordanDer => "jordan_der",
            CheckName::Superstab => "superstab",
            CheckName::Spanning => "spanning",
            CheckName::T1Linearity => "t1_linearity",
            CheckName::ILinearity => "i_linearity",
            CheckName::Uniqueness => "uniqueness",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlFamilyName {
    Power,
    Constant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlSpec {
    pub family: ControlFamilyName,
    pub eps: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<u32>,
}

/// Linear part of the map under test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseKind {
    Zero,
    Identity,
    /// Seeded Gaussian matrix.
    Random,
    /// Seeded unitary: an exact ternary homomorphism.
    Unitary,
    /// `iτ I`: an exact ternary derivation.
    Derivation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSpec {
    pub base: BaseKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbationFamily {
    None,
    Bounded,
    Power,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationSpec {
    pub family: PerturbationFamily,
    #[serde(default)]
    pub amplitude: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponent: Option<f64>,
    /// Derived from the master seed when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

fn default_cauchy_tol() -> f64 {
    1e-10
}
fn default_tail_tol() -> f64 {
    1e-12
}
fn default_check_tol() -> f64 {
    1e-6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_cauchy_tol")]
    pub cauchy_tol: f64,
    #[serde(default = "default_tail_tol")]
    pub tail_tol: f64,
    #[serde(default = "default_check_tol")]
    pub check_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            cauchy_tol: default_cauchy_tol(),
            tail_tol: default_tail_tol(),
            check_tol: default_check_tol(),
        }
    }
}

fn default_cert_samples() -> usize {
    400
}
fn default_a_count() -> usize {
    50
}
fn default_bound_samples() -> usize {
    200
}
fn default_a_scales() -> Vec<f64> {
    vec![0.1, 1.0, 10.0]
}
fn default_n_max() -> usize {
    200
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sampling {
    #[serde(default = "default_cert_samples")]
    pub cert_samples: usize,
    #[serde(default = "default_bound_samples")]
    pub bound_samples: usize,
    /// Number of `a` samples for the Jordan and superstability checks.
    #[serde(default = "default_a_count")]
    pub a_samples: usize,
    /// Norms of `a` swept by the coupled certification.
    #[serde(default = "default_a_scales")]
    pub a_scales: Vec<f64>,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
}

impl Default for Sampling {
    fn default() -> Self {
        Sampling {
            cert_samples: default_cert_samples(),
            bound_samples: default_bound_samples(),
            a_samples: default_a_count(),
            a_scales: default_a_scales(),
            n_max: default_n_max(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: String,
    /// Report file stem; defaults to the config file stem.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub format: OutputFormat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub dim: usize,
    pub mode: Mode,
    pub r: f64,
    pub s: f64,
    pub t: f64,
    pub direction: DirectionSpec,
    pub checks: Vec<CheckName>,
    pub control: ControlSpec,
    pub map: MapSpec,
    pub perturbation: PerturbationSpec,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub sampling: Sampling,
    pub output: OutputSpec,
}

/// Parse or validation failure, carrying the offending field and, for syntax
/// errors, the line.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub field: Option<String>,
    pub line: Option<usize>,
    pub message: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if let Some(line) = self.line {
            write!(f, "line {line}: ")?;
        }
        if let Some(field) = &self.field {
            write!(f, "field `{field}`: ")?;
        }
        f.write_str(&self.message)
    }
}

impl std::error::Error for ConfigError {}

fn invalid(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError {
        field: Some(field.to_string()),
        line: None,
        message: message.into(),
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| {
            let line = e.span().map(|span| text[..span.start].matches('\n').count() + 1);
            ConfigError {
                field: None,
                line,
                message: e.message().to_string(),
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            field: None,
            line: None,
            message: format!("cannot read {}: {e}", path.display()),
        })?;
        Self::from_file_text(&text, path)
    }

    /// Parses `text` read from `path`; the report name defaults to the file stem.
    pub fn from_file_text(text: &str, path: &Path) -> Result<Self, ConfigError> {
        let mut cfg = ExperimentConfig::from_toml_str(text)?;
        if cfg.output.name.is_none() {
            cfg.output.name = path.file_stem().map(|s| s.to_string_lossy().into_owned());
        }
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String, ConfigError> {
        toml::to_string(self).map_err(|e| ConfigError {
            field: None,
            line: None,
            message: e.to_string(),
        })
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(1..=crate::talg::MAX_DIM).contains(&self.dim) {
            return Err(invalid("dim", format!("must be in 1..=64, got {}", self.dim)));
        }
        if i64::try_from(self.seed).is_err() {
            return Err(invalid("seed", format!("must be at most {} to fit a TOML integer, got {}", i64::MAX, self.seed)));
        }
        self.base_params().map_err(|e| invalid("r", e.to_string()))?;
        self.control_function()
            .and_then(|cf| cf.validate())
            .map_err(|e| invalid("control", e.to_string()))?;
        if self.checks.is_empty() {
            return Err(invalid("checks", "at least one check must be enabled"));
        }
        let mut seen = std::collections::BTreeSet::new();
        for c in &self.checks {
            if !seen.insert(*c) {
                return Err(invalid("checks", format!("`{}` listed twice", c.as_str())));
            }
        }
        if self.map.base == BaseKind::Derivation && self.map.tau.is_none() {
            return Err(invalid("map.tau", "the derivation base needs tau"));
        }
        if self.map.base != BaseKind::Derivation && self.map.tau.is_some() {
            return Err(invalid("map.tau", "tau only applies to the derivation base"));
        }
        let pert = &self.perturbation;
        if !(pert.amplitude.is_finite() && pert.amplitude >= 0.0) {
            return Err(invalid("perturbation.amplitude", "must be a nonnegative finite real"));
        }
        match pert.family {
            PerturbationFamily::Power if pert.exponent.is_none() => {
                return Err(invalid("perturbation.exponent", "the power family needs an exponent"))
            }
            PerturbationFamily::None | PerturbationFamily::Bounded if pert.exponent.is_some() => {
                return Err(invalid("perturbation.exponent", "only the power family takes an exponent"))
            }
            _ => {}
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("tolerances.cauchy_tol", t.cauchy_tol),
            ("tolerances.tail_tol", t.tail_tol),
            ("tolerances.check_tol", t.check_tol),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(name, format!("must be positive, got {v}")));
            }
        }
        let smp = &self.sampling;
        if smp.cert_samples == 0 || smp.bound_samples == 0 || smp.a_samples == 0 {
            return Err(invalid("sampling", "sample counts must be positive"));
        }
        if smp.a_scales.is_empty() || smp.a_scales.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
            return Err(invalid("sampling.a_scales", "needs positive finite norms"));
        }
        Ok(())
    }

    /// Parameters with the configured direction, `auto` read as forward.
    pub fn base_params(&self) -> Result<JensenParams> {
        let dir = match self.direction {
            DirectionSpec::Backward => Direction::Backward,
            _ => Direction::Forward,
        };
        JensenParams::new(self.r, self.s, self.t, dir)
    }

    pub fn control_function(&self) -> Result<ControlFunction> {
        let c = &self.control;
        match c.family {
            ControlFamilyName::Constant => {
                if c.p.is_some() || c.m.is_some() {
                    return Err(Error::InvalidParams("the constant family takes no p or m".into()));
                }
                Ok(ControlFunction::constant(c.eps))
            }
            ControlFamilyName::Power => {
                let p = c
                    .p
                    .ok_or_else(|| Error::InvalidParams("the power family needs p".into()))?;
                Ok(ControlFunction::power_m(c.eps, p, c.m.unwrap_or(1)))
            }
        }
    }

    pub fn shape(&self) -> Shape {
        match self.mode {
            Mode::Matrix => Shape::Matrix(self.dim),
            Mode::Vector => Shape::Vector(self.dim),
        }
    }

    pub fn perturbation(&self, derived_seed: u64) -> Perturbation {
        let p = &self.perturbation;
        let seed = p.seed.unwrap_or(derived_seed);
        match p.family {
            PerturbationFamily::None => Perturbation::None,
            PerturbationFamily::Bounded => Perturbation::Bounded {
                c: p.amplitude,
                seed,
            },
            PerturbationFamily::Power => Perturbation::Power {
                eps0: p.amplitude,
                p: p.exponent.unwrap_or(0.0),
                seed,
            },
        }
    }

    pub fn is_enabled(&self, check: CheckName) -> bool {
        self.checks.contains(&check)
    }

    /// Applies one `axis=value` sweep coordinate.
    pub fn set_axis(&mut self, axis: &str, value: &str) -> Result<(), ConfigError> {
        let float = |v: &str| {
            v.parse::<f64>()
                .map_err(|e| invalid(axis, format!("`{v}` is not a number: {e}")))
        };
        let int = |v: &str| {
            v.parse::<u64>()
                .map_err(|e| invalid(axis, format!("`{v}` is not a nonnegative integer: {e}")))
        };
        match axis {
            "r" => self.r = float(value)?,
            "s" => self.s = float(value)?,
            "t" => self.t = float(value)?,
            "eps" => self.control.eps = float(value)?,
            "p" => {
                let p = float(value)?;
                self.control.p = Some(p);
                // the perturbation follows the control exponent
                if self.perturbation.family == PerturbationFamily::Power {
                    self.perturbation.exponent = Some(p);
                }
            }
            "dim" => self.dim = int(value)? as usize,
            "seed" => self.seed = int(value)?,
            _ => {
                return Err(invalid(
                    axis,
                    "unknown sweep axis; allowed: r, s, t, eps, p, dim, seed",
                ))
            }
        }
        Ok(())
    }
}

//! Run configuration files.
//!
//! A run config is TOML with `[simulation]`, `[coefficients]`, `[noise]`,
//! and optional `[[shift]]` sections. Coefficient blocks carry totals that
//! are spread evenly over the attributes of each input block once the
//! schema is known (`beta_k = beta_total / |x|`, `gamma_l = gamma_total /
//! |z|`), so the same config works for any schema.

use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::factor::{FactorCoefficients, NoiseKind, NoiseSpec};
use crate::schema::{AttributeSchema, Category};
use crate::sim::{ShiftEvent, SimConfig, DEFAULT_POPULATION, DEFAULT_STEPS};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("io error reading config: {0}")]
    Io(#[from] std::io::Error),
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("noise kind {0:?} is not one of none, uniform, gaussian")]
    UnknownNoiseKind(String),
    #[error("noise parameter {name} must be finite and >= 0, got {value}")]
    InvalidNoiseParameter { name: &'static str, value: f64 },
    #[error("uniform noise requires half_width; gaussian requires std_dev")]
    MissingNoiseParameter,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub simulation: SimulationSection,
    #[serde(default)]
    pub coefficients: CoefficientsSection,
    #[serde(default)]
    pub noise: NoiseSection,
    #[serde(default, rename = "shift")]
    pub shifts: Vec<ShiftSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_population")]
    pub population: usize,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientsSection {
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_block")]
    pub beta1: f64,
    #[serde(default = "default_block")]
    pub beta_total: f64,
    #[serde(default = "default_block")]
    pub gamma_total: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    #[serde(default = "default_noise_kind")]
    pub kind: String,
    pub half_width: Option<f64>,
    pub std_dev: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShiftSection {
    pub step: usize,
    pub alpha: f64,
    #[serde(default = "default_block")]
    pub beta1: f64,
    #[serde(default = "default_block")]
    pub beta_total: f64,
    #[serde(default = "default_block")]
    pub gamma_total: f64,
}

fn default_steps() -> usize {
    DEFAULT_STEPS
}

fn default_population() -> usize {
    DEFAULT_POPULATION
}

fn default_alpha() -> f64 {
    0.6
}

fn default_block() -> f64 {
    0.2
}

fn default_noise_kind() -> String {
    "none".to_string()
}

impl Default for SimulationSection {
    fn default() -> Self {
        Self { steps: DEFAULT_STEPS, population: DEFAULT_POPULATION, seed: 0 }
    }
}

impl Default for CoefficientsSection {
    fn default() -> Self {
        Self { alpha: 0.6, beta1: 0.2, beta_total: 0.2, gamma_total: 0.2 }
    }
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self { kind: "none".to_string(), half_width: None, std_dev: None, seed: 0 }
    }
}

const DEFAULT_RUN_TOML: &str = include_str!("../data/run.toml");

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    /// The defaults shipped with the crate.
    pub fn bundled() -> Self {
        Self::from_toml(DEFAULT_RUN_TOML).expect("bundled run config is valid")
    }

    fn noise_spec(&self) -> Result<NoiseSpec, ConfigError> {
        let check = |name: &'static str, value: Option<f64>| -> Result<f64, ConfigError> {
            let v = value.ok_or(ConfigError::MissingNoiseParameter)?;
            if !(v.is_finite() && v >= 0.0) {
                return Err(ConfigError::InvalidNoiseParameter { name, value: v });
            }
            Ok(v)
        };
        let kind = match self.noise.kind.as_str() {
            "none" => NoiseKind::None,
            "uniform" => NoiseKind::Uniform { half_width: check("half_width", self.noise.half_width)? },
            "gaussian" => NoiseKind::Gaussian { std_dev: check("std_dev", self.noise.std_dev)? },
            other => return Err(ConfigError::UnknownNoiseKind(other.to_string())),
        };
        Ok(NoiseSpec { kind, seed: self.noise.seed })
    }

    /// Expands the config against a schema's category split into a
    /// ready-to-run [`SimConfig`].
    pub fn sim_config(&self, schema: &AttributeSchema) -> Result<SimConfig, ConfigError> {
        let x_len = schema.len() - schema.category_indices(Category::Resultant).len();
        let z_len = schema.category_indices(Category::Resultant).len();
        let expand = |alpha: f64, beta1: f64, beta_total: f64, gamma_total: f64| {
            FactorCoefficients::uniform(alpha, beta1, beta_total, x_len, gamma_total, z_len)
        };
        let c = &self.coefficients;
        Ok(SimConfig {
            steps: self.simulation.steps,
            population_size: self.simulation.population,
            seed: self.simulation.seed,
            coefficients: expand(c.alpha, c.beta1, c.beta_total, c.gamma_total),
            noise: self.noise_spec()?,
            shifts: self
                .shifts
                .iter()
                .map(|s| ShiftEvent {
                    step: s.step,
                    coefficients: expand(s.alpha, s.beta1, s.beta_total, s.gamma_total),
                })
                .collect(),
        })
    }
}

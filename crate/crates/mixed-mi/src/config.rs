//! JSON experiment configuration: the on-disk schema and its translation
//! into runtime model, kernel and bandwidth objects.

use crate::kde::{Bandwidth, KernelSpec};
use crate::model::{ContinuousDensity, MixedPairModel, ModelError};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Full experiment description as read from a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Optional human-readable case name carried into reports.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub model: ModelConfig,
    /// Sample size per replicate.
    pub n: usize,
    /// Number of Monte Carlo replicates.
    pub m_reps: usize,
    pub kernel: KernelConfig,
    pub bandwidth: Bandwidth,
    pub seed: u64,
    #[serde(default)]
    pub parallelism: Parallelism,
    #[serde(default = "all_outputs")]
    pub outputs: Vec<OutputKind>,
}

/// Mixture model description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub dim: usize,
    pub probs: Vec<f64>,
    pub conditionals: Vec<DensityConfig>,
}

/// One conditional density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum DensityConfig {
    StudentT {
        nu: f64,
        mu: f64,
        sigma: f64,
    },
    Pareto {
        x_m: f64,
        alpha: f64,
    },
    Mvt {
        nu: f64,
        mu: Vec<f64>,
        shape: Vec<Vec<f64>>,
    },
}

/// Kernel description; dimension comes from the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelConfig {
    StudentT { nu: f64 },
}

/// Worker count for replicate execution: `"auto"` or an explicit integer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Parallelism {
    #[default]
    Auto,
    Fixed(usize),
}

impl Serialize for Parallelism {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Parallelism::Auto => s.serialize_str("auto"),
            Parallelism::Fixed(n) => s.serialize_u64(*n as u64),
        }
    }
}

impl<'de> Deserialize<'de> for Parallelism {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl serde::de::Visitor<'_> for V {
            type Value = Parallelism;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                write!(f, "\"auto\" or a positive worker count")
            }
            fn visit_str<E: serde::de::Error>(self, v: &str) -> Result<Parallelism, E> {
                if v.eq_ignore_ascii_case("auto") {
                    Ok(Parallelism::Auto)
                } else {
                    Err(E::custom(format!("unknown parallelism {v:?}")))
                }
            }
            fn visit_u64<E: serde::de::Error>(self, v: u64) -> Result<Parallelism, E> {
                if v >= 1 {
                    Ok(Parallelism::Fixed(v as usize))
                } else {
                    Err(E::custom("worker count must be at least 1"))
                }
            }
        }
        d.deserialize_any(V)
    }
}

/// Artifacts the simulate command may write.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputKind {
    EstimatesCsv,
    SummaryJson,
    HistCsv,
    QqCsv,
}

fn all_outputs() -> Vec<OutputKind> {
    vec![
        OutputKind::EstimatesCsv,
        OutputKind::SummaryJson,
        OutputKind::HistCsv,
        OutputKind::QqCsv,
    ]
}

/// Configuration rejection reasons.
#[derive(Debug)]
pub enum ConfigError {
    Parse(serde_json::Error),
    Invalid(String),
    Model(ModelError),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Parse(e) => write!(f, "config parse error: {e}"),
            ConfigError::Invalid(msg) => write!(f, "invalid config: {msg}"),
            ConfigError::Model(e) => write!(f, "invalid model: {e}"),
        }
    }
}

impl std::error::Error for ConfigError {}

impl From<ModelError> for ConfigError {
    fn from(e: ModelError) -> Self {
        ConfigError::Model(e)
    }
}

impl DensityConfig {
    pub fn build(&self) -> Result<ContinuousDensity, ModelError> {
        match self {
            DensityConfig::StudentT { nu, mu, sigma } => {
                ContinuousDensity::student_t(*nu, *mu, *sigma)
            }
            DensityConfig::Pareto { x_m, alpha } => ContinuousDensity::pareto(*x_m, *alpha),
            DensityConfig::Mvt { nu, mu, shape } => {
                ContinuousDensity::multivariate_t(*nu, mu.clone(), shape.clone())
            }
        }
    }
}

impl ModelConfig {
    pub fn build(&self) -> Result<MixedPairModel, ConfigError> {
        let conditionals = self
            .conditionals
            .iter()
            .map(|c| c.build())
            .collect::<Result<Vec<_>, _>>()?;
        let model = MixedPairModel::new(self.probs.clone(), conditionals)?;
        if model.dim() != self.dim {
            return Err(ConfigError::Invalid(format!(
                "declared dim {} but conditionals have dim {}",
                self.dim,
                model.dim()
            )));
        }
        Ok(model)
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(ConfigError::Parse)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialization cannot fail")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n < 2 {
            return Err(ConfigError::Invalid(format!(
                "n must be >= 2, got {}",
                self.n
            )));
        }
        if self.m_reps < 1 {
            return Err(ConfigError::Invalid("m_reps must be >= 1".into()));
        }
        self.bandwidth
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let KernelConfig::StudentT { nu } = self.kernel;
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(ConfigError::Invalid("kernel nu must be positive".into()));
        }
        self.model.build().map(|_| ())
    }

    pub fn build_model(&self) -> Result<MixedPairModel, ConfigError> {
        self.model.build()
    }

    pub fn build_kernel(&self) -> KernelSpec {
        let KernelConfig::StudentT { nu } = self.kernel;
        KernelSpec::student_t(nu, self.model.dim)
    }
}

//! Experiment configuration: a single JSON document per run.

use std::path::PathBuf;

use serde::Deserialize;
use serde_json::Value;

use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Top-level config. `run_params` stays schemaless here; the runner parses it
/// per run kind so errors can name the exact field.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: u32,
    #[serde(default)]
    pub space: SpaceCfg,
    #[serde(default)]
    pub operator: Option<OperatorCfg>,
    pub run: RunKind,
    #[serde(default)]
    pub run_params: Value,
    #[serde(default)]
    pub output: OutputCfg,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceCfg {
    #[serde(default = "default_dimension")]
    pub dimension: usize,
    #[serde(default = "default_p_exp")]
    pub p_exp: f64,
}

fn default_dimension() -> usize {
    32
}

fn default_p_exp() -> f64 {
    2.0
}

impl Default for SpaceCfg {
    fn default() -> Self {
        Self { dimension: default_dimension(), p_exp: default_p_exp() }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorCfg {
    pub name: String,
    #[serde(default)]
    pub params: Value,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunKind {
    Picard,
    Schu,
    Center,
    Gate,
    Suite,
}

impl RunKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Picard => "picard",
            Self::Schu => "schu",
            Self::Center => "center",
            Self::Gate => "gate",
            Self::Suite => "suite",
        }
    }
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputCfg {
    /// Artifact path; relative paths resolve under the output directory.
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
    /// Include full iterate lists in JSON trace output.
    #[serde(default)]
    pub full: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config {
            path: "<document>".into(),
            message: e.to_string(),
        })?;
        cfg.validate_shallow()?;
        Ok(cfg)
    }

    fn validate_shallow(&self) -> Result<()> {
        if self.schema != SCHEMA_VERSION {
            return Err(Error::Config {
                path: "schema".into(),
                message: format!("unsupported schema {}, expected {SCHEMA_VERSION}", self.schema),
            });
        }
        if self.space.dimension == 0 {
            return Err(Error::Config {
                path: "space.dimension".into(),
                message: "dimension must be at least 1".into(),
            });
        }
        if !(self.space.p_exp.is_finite() && self.space.p_exp >= 1.0) {
            return Err(Error::Config {
                path: "space.p_exp".into(),
                message: format!("norm exponent must be >= 1, got {}", self.space.p_exp),
            });
        }
        Ok(())
    }
}

// ---- field helpers for run_params parsing -------------------------------

pub(crate) fn f64_field(params: &Value, path: &str, key: &str, default: Option<f64>) -> Result<f64> {
    match params.get(key) {
        None | Some(Value::Null) => default.ok_or_else(|| Error::Config {
            path: format!("{path}.{key}"),
            message: "missing field".into(),
        }),
        Some(v) => v.as_f64().ok_or_else(|| Error::Config {
            path: format!("{path}.{key}"),
            message: format!("expected a number, got {v}"),
        }),
    }
}

pub(crate) fn usize_field(
    params: &Value,
    path: &str,
    key: &str,
    default: Option<usize>,
) -> Result<usize> {
    match params.get(key) {
        None | Some(Value::Null) => default.ok_or_else(|| Error::Config {
            path: format!("{path}.{key}"),
            message: "missing field".into(),
        }),
        Some(v) => v
            .as_u64()
            .map(|u| u as usize)
            .ok_or_else(|| Error::Config {
                path: format!("{path}.{key}"),
                message: format!("expected a non-negative integer, got {v}"),
            }),
    }
}

pub(crate) fn u64_field(params: &Value, path: &str, key: &str, default: Option<u64>) -> Result<u64> {
    match params.get(key) {
        None | Some(Value::Null) => default.ok_or_else(|| Error::Config {
            path: format!("{path}.{key}"),
            message: "missing field".into(),
        }),
        Some(v) => v.as_u64().ok_or_else(|| Error::Config {
            path: format!("{path}.{key}"),
            message: format!("expected a non-negative integer, got {v}"),
        }),
    }
}

pub(crate) fn str_field<'v>(
    params: &'v Value,
    path: &str,
    key: &str,
    default: Option<&'static str>,
) -> Result<&'v str> {
    match params.get(key) {
        None | Some(Value::Null) => default.ok_or_else(|| Error::Config {
            path: format!("{path}.{key}"),
            message: "missing field".into(),
        }),
        Some(v) => v.as_str().ok_or_else(|| Error::Config {
            path: format!("{path}.{key}"),
            message: format!("expected a string, got {v}"),
        }),
    }
}

pub(crate) fn coords_field(
    params: &Value,
    path: &str,
    key: &str,
    default: Option<&[f64]>,
) -> Result<Vec<f64>> {
    match params.get(key) {
        None | Some(Value::Null) => default.map(<[f64]>::to_vec).ok_or_else(|| Error::Config {
            path: format!("{path}.{key}"),
            message: "missing field".into(),
        }),
        Some(v) => coords_from(v, &format!("{path}.{key}")),
    }
}

pub(crate) fn coords_from(value: &Value, path: &str) -> Result<Vec<f64>> {
    let array = value.as_array().ok_or_else(|| Error::Config {
        path: path.into(),
        message: format!("expected an array of numbers, got {value}"),
    })?;
    array
        .iter()
        .enumerate()
        .map(|(i, v)| {
            v.as_f64().ok_or_else(|| Error::Config {
                path: format!("{path}[{i}]"),
                message: format!("expected a number, got {v}"),
            })
        })
        .collect()
}

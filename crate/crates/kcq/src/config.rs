//! Experiment files: one JSON document per experiment.
//!
//! Parsing happens in two passes. The outer document is read first; then
//! every sweep point's parameter block is merged and decoded into the typed
//! parameters of its protocol, so a bad value anywhere is reported with the
//! JSON path that produced it.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Protocol {
    Qk,
    AlphaEta,
    Cppm,
    Metrics,
}

impl Protocol {
    pub fn name(self) -> &'static str {
        match self {
            Protocol::Qk => "qk",
            Protocol::AlphaEta => "alpha-eta",
            Protocol::Cppm => "cppm",
            Protocol::Metrics => "metrics",
        }
    }
}

/// One swept parameter: `params[parameter]` takes each of `values`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub parameter: String,
    pub values: Vec<Value>,
}

/// A single axis, or several axes swept as a grid (last axis fastest).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Sweep {
    One(SweepAxis),
    Grid(Vec<SweepAxis>),
}

impl Sweep {
    pub fn axes(&self) -> &[SweepAxis] {
        match self {
            Sweep::One(a) => std::slice::from_ref(a),
            Sweep::Grid(v) => v,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    #[serde(default)]
    pub description: Option<String>,
    pub protocol: Protocol,
    pub params: Map<String, Value>,
    #[serde(default)]
    pub sweep: Option<Sweep>,
    pub trials: u64,
    pub rng_seed: u64,
    #[serde(default)]
    pub output_path: Option<PathBuf>,
}

/// One grid point with its merged parameter block.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub index: u64,
    /// `name=value` pairs of the swept parameters, `;`-separated.
    pub label: String,
    pub params: Value,
}

fn path_error<E: std::fmt::Display>(prefix: &str, e: serde_path_to_error::Error<E>) -> HarnessError {
    let inner = e.path().to_string();
    let path = match (prefix.is_empty(), inner.as_str()) {
        (true, ".") => "<root>".to_string(),
        (true, _) => inner,
        (false, ".") => prefix.to_string(),
        (false, _) => format!("{prefix}.{inner}"),
    };
    HarnessError::config(path, e.into_inner())
}

/// Decode `value` into `T`, reporting failures under `prefix`.
pub fn decode_at<T: serde::de::DeserializeOwned>(prefix: &str, value: Value) -> Result<T> {
    serde_path_to_error::deserialize(value).map_err(|e| path_error(prefix, e))
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| path_error("", e))?;
        cfg.validate_shape()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text).map_err(|e| match e {
            HarnessError::Config { path: field, msg } => HarnessError::config(format!("{}: {field}", path.display()), msg),
            other => other,
        })
    }

    fn validate_shape(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(HarnessError::config("trials", "must be >= 1"));
        }
        if self.name.trim().is_empty() {
            return Err(HarnessError::config("name", "must not be empty"));
        }
        if let Some(sweep) = &self.sweep {
            let axes = sweep.axes();
            if axes.is_empty() {
                return Err(HarnessError::config("sweep", "needs at least one axis"));
            }
            for (i, a) in axes.iter().enumerate() {
                let at = if matches!(sweep, Sweep::One(_)) { "sweep".to_string() } else { format!("sweep[{i}]") };
                if a.values.is_empty() {
                    return Err(HarnessError::config(format!("{at}.values"), "must not be empty"));
                }
                if axes[..i].iter().any(|b| b.parameter == a.parameter) {
                    return Err(HarnessError::config(format!("{at}.parameter"), format!("`{}` swept twice", a.parameter)));
                }
            }
        }
        Ok(())
    }

    /// Every sweep point in order. Without a sweep there is one point.
    pub fn points(&self) -> Vec<SweepPoint> {
        let axes = self.sweep.as_ref().map(|s| s.axes()).unwrap_or(&[]);
        let total: usize = axes.iter().map(|a| a.values.len()).product();
        (0..total)
            .map(|index| {
                let mut params = self.params.clone();
                let mut label = Vec::with_capacity(axes.len());
                let mut rest = index;
                let mut picks = vec![0; axes.len()];
                for (k, a) in axes.iter().enumerate().rev() {
                    picks[k] = rest % a.values.len();
                    rest /= a.values.len();
                }
                for (a, &j) in axes.iter().zip(&picks) {
                    let v = a.values[j].clone();
                    label.push(match &v {
                        Value::String(s) => format!("{}={s}", a.parameter),
                        _ => format!("{}={v}", a.parameter),
                    });
                    params.insert(a.parameter.clone(), v);
                }
                SweepPoint {
                    index: index as u64,
                    label: label.join(";"),
                    params: Value::Object(params),
                }
            })
            .collect()
    }
}

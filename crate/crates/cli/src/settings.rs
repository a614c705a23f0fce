//! Layered settings: serde defaults, then a JSON config file, then flags.
//!
//! Every layer is a JSON object. Flags and `--set key=value` pairs are merged
//! last, and the result is deserialized with unknown keys rejected.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use oudrift::Scheme;

use crate::CliError;

pub struct Layers {
    base: Map<String, Value>,
}

impl Layers {
    pub fn from_file(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self { base: Map::new() });
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config file {}: {e}", path.display())))?;
        match serde_json::from_str::<Value>(&text) {
            Ok(Value::Object(base)) => Ok(Self { base }),
            Ok(_) => Err(CliError::Usage(format!("config file {} must hold a JSON object", path.display()))),
            Err(e) => Err(CliError::Usage(format!("config file {}: {e}", path.display()))),
        }
    }

    pub fn set(&mut self, key: &str, value: impl Serialize) {
        self.base.insert(key.to_string(), serde_json::to_value(value).expect("plain data serializes"));
    }

    pub fn set_opt<T: Serialize>(&mut self, key: &str, value: Option<T>) {
        if let Some(v) = value {
            self.set(key, v);
        }
    }

    /// Applies `key=value` pairs; the value is read as JSON when it parses,
    /// otherwise as a string.
    pub fn set_pairs(&mut self, pairs: &[String]) -> Result<(), CliError> {
        for p in pairs {
            let (k, v) = p
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("--set expects key=value, got '{p}'")))?;
            let value = serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_string()));
            self.base.insert(k.trim().to_string(), value);
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.base.get(key)
    }

    pub fn build<T: DeserializeOwned>(self, what: &str) -> Result<T, CliError> {
        serde_json::from_value(Value::Object(self.base)).map_err(|e| CliError::Usage(format!("{what} settings: {e}")))
    }
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSettings {
    /// Model file (JSON or CSV). When absent a model is generated.
    pub model: Option<PathBuf>,
    pub d: Option<usize>,
    pub s: Option<usize>,
    pub margin: f64,
    pub model_seed: Option<u64>,
    pub t_horizon: f64,
    pub n_steps: usize,
    pub scheme: Scheme,
    pub seed: u64,
    pub brownian: bool,
    pub write_path: bool,
}

impl Default for SimulateSettings {
    fn default() -> Self {
        Self {
            model: None,
            d: None,
            s: None,
            margin: 0.5,
            model_seed: None,
            t_horizon: 100.0,
            n_steps: 100_000,
            scheme: Scheme::Exact,
            seed: 0,
            brownian: false,
            write_path: false,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimateSettings {
    pub stats: Option<PathBuf>,
    /// `mle`, `lasso`, `dantzig` or `all`.
    pub method: String,
    /// Fixed penalty; when absent the plug-in rule with `eps0` is used.
    pub lambda: Option<f64>,
    pub eps0: f64,
    pub max_iter: usize,
    pub tol: f64,
    pub lp_tol: f64,
}

impl Default for EstimateSettings {
    fn default() -> Self {
        Self { stats: None, method: "all".into(), lambda: None, eps0: 0.1, max_iter: 20_000, tol: 1e-8, lp_tol: 1e-9 }
    }
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundsSettings {
    pub d: Option<usize>,
    pub s: Option<usize>,
    pub c0: f64,
    pub eps0: f64,
    pub t_horizon: f64,
    pub gamma: f64,
    pub s0: Option<usize>,
    pub lambda: Option<f64>,
    pub h0_points: Vec<f64>,
    pub unit_constants: bool,
    pub model: Option<PathBuf>,
}

impl Default for BoundsSettings {
    fn default() -> Self {
        Self {
            d: None,
            s: None,
            c0: 1.0,
            eps0: 0.1,
            t_horizon: 300.0,
            gamma: 1.0,
            s0: None,
            lambda: None,
            h0_points: vec![1.0],
            unit_constants: false,
            model: None,
        }
    }
}

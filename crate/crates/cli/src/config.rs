//! Layered configuration: JSON file values overridden by command-line flags.

use std::path::Path;

use anyhow::{Context, Result};
use serde::de::DeserializeOwned;
use serde_json::{Map, Value};

/// Flag values keyed by config field, inserted over the file values.
#[derive(Debug, Default, Clone)]
pub struct Overrides(Map<String, Value>);

impl Overrides {
    pub fn set(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.0.insert(key.to_string(), value.into());
        self
    }

    pub fn set_opt<T: Into<Value>>(&mut self, key: &str, value: Option<T>) -> &mut Self {
        if let Some(v) = value {
            self.set(key, v);
        }
        self
    }
}

/// A file-or-flag value that is either a number or a keyword such as `auto`.
pub fn number_or_keyword(s: &str) -> Value {
    match s.trim().parse::<f64>() {
        Ok(x) => Value::from(x),
        Err(_) => Value::from(s.trim()),
    }
}

pub fn parse_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>, String>
where
    T::Err: std::fmt::Display,
{
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<T>()
                .map_err(|e| format!("`{}`: {e}", p.trim()))
        })
        .collect()
}

pub fn read_file(path: &Path) -> Result<(Map<String, Value>, Vec<u8>)> {
    let bytes =
        std::fs::read(path).with_context(|| format!("reading config {}", path.display()))?;
    let value: Value = serde_json::from_slice(&bytes)
        .map_err(|e| ConfigError(format!("config {} is not valid JSON: {e}", path.display())))?;
    match value {
        Value::Object(map) => Ok((map, bytes)),
        _ => Err(ConfigError(format!("config {} must be a JSON object", path.display())).into()),
    }
}

/// `overrides` laid over `base`.
pub fn merge(mut base: Map<String, Value>, overrides: Overrides) -> Value {
    base.extend(overrides.0);
    Value::Object(base)
}

pub fn parse<T: DeserializeOwned>(config: Value) -> Result<T> {
    serde_json::from_value(config)
        .map_err(|e| ConfigError(format!("invalid configuration: {e}")).into())
}

/// Malformed or inconsistent user configuration.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

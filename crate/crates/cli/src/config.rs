//! `key = value` config files and their merge with command-line flags.
//! Flags win; every resolved value is recorded for the summary.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use serde_json::Value;

use crate::CliError;

#[derive(Debug, Default)]
pub struct Resolver {
    file: BTreeMap<String, String>,
    used: BTreeMap<String, Value>,
}

fn normalize(key: &str) -> String {
    key.trim().trim_start_matches("--").replace('_', "-")
}

impl Resolver {
    pub fn new(path: Option<&Path>) -> Result<Self, CliError> {
        let mut file = BTreeMap::new();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read config file {}: {e}", path.display())))?;
            for (lineno, raw) in text.lines().enumerate() {
                let line = raw.split('#').next().unwrap_or("").trim();
                if line.is_empty() {
                    continue;
                }
                let (k, v) = line.split_once('=').ok_or_else(|| {
                    CliError::Usage(format!("{}:{}: expected 'key = value', got '{raw}'", path.display(), lineno + 1))
                })?;
                file.insert(normalize(k), v.trim().trim_matches('"').to_string());
            }
        }
        Ok(Self { file, used: BTreeMap::new() })
    }

    /// Flag value, else config-file value, else `default`. Parse failures
    /// name the flag.
    pub fn get<T>(&mut self, key: &str, flag: Option<T>, default: Option<T>) -> Result<Option<T>, CliError>
    where
        T: FromStr + Display + Clone,
        T::Err: Display,
    {
        let value = match flag {
            Some(v) => Some(v),
            None => match self.file.get(key) {
                Some(raw) => Some(raw.parse::<T>().map_err(|e| {
                    CliError::Usage(format!("invalid value '{raw}' for --{key} in the config file: {e}"))
                })?),
                None => default,
            },
        };
        if let Some(v) = &value {
            let text = v.to_string();
            let json = match text.parse::<i64>() {
                Ok(i) => Some(Value::Number(i.into())),
                Err(_) => text.parse::<f64>().ok().and_then(|x| serde_json::Number::from_f64(x).map(Value::Number)),
            };
            self.used.insert(key.to_string(), json.unwrap_or(Value::String(text)));
        }
        Ok(value)
    }

    pub fn require<T>(&mut self, key: &str, flag: Option<T>, default: Option<T>) -> Result<T, CliError>
    where
        T: FromStr + Display + Clone,
        T::Err: Display,
    {
        self.get(key, flag, default)?.ok_or_else(|| CliError::Usage(format!("missing required option --{key}")))
    }

    /// Boolean switches: a flag that is present means true.
    pub fn switch(&mut self, key: &str, flag: bool) -> Result<bool, CliError> {
        let v = if flag { true } else { self.get::<bool>(key, None, Some(false))?.unwrap_or(false) };
        self.used.insert(key.to_string(), Value::Bool(v));
        Ok(v)
    }

    pub fn positive(&mut self, key: &str, flag: Option<f64>, default: Option<f64>) -> Result<f64, CliError> {
        let v = self.require(key, flag, default)?;
        if !(v > 0.0 && v.is_finite()) {
            return Err(CliError::Usage(format!("invalid value for --{key}: must be positive and finite, got {v}")));
        }
        Ok(v)
    }

    /// Keys in the config file that no option consumed.
    pub fn unused(&self) -> Vec<String> {
        self.file.keys().filter(|k| !self.used.contains_key(*k) && *k != "config").cloned().collect()
    }

    pub fn echo(&self) -> Value {
        Value::Object(self.used.clone().into_iter().collect())
    }
}

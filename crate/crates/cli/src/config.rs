//! Flat `key = value` configuration files.
//!
//! Precedence is flags over config file over built-in defaults. Keys are the
//! long flag names without the leading dashes (`seed`, `n-values`, ...);
//! `#` starts a comment. There is no environment-variable configuration.

use std::collections::HashMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use crate::util::CliError;

#[derive(Debug, Default)]
pub struct ConfigMap {
    entries: HashMap<String, String>,
}

impl ConfigMap {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Usage(format!("cannot read config file {}: {e}", path.display()))
        })?;
        let mut entries = HashMap::new();
        for (line_no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Usage(format!(
                    "config line {} is not key=value: '{line}'",
                    line_no + 1
                )));
            };
            entries.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(Self { entries })
    }

    /// Applies the precedence chain for one option.
    pub fn resolve<T>(&self, flag: Option<T>, key: &str, default: T) -> Result<T, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        if let Some(value) = flag {
            return Ok(value);
        }
        match self.entries.get(key) {
            Some(raw) => raw.parse::<T>().map_err(|e| {
                CliError::Usage(format!("config key '{key}': invalid value '{raw}': {e}"))
            }),
            None => Ok(default),
        }
    }

    /// Like [`Self::resolve`] but without a default.
    pub fn resolve_optional<T>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.entries.get(key) {
            Some(raw) => raw.parse::<T>().map(Some).map_err(|e| {
                CliError::Usage(format!("config key '{key}': invalid value '{raw}': {e}"))
            }),
            None => Ok(None),
        }
    }
}

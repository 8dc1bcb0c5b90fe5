use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::CliError;

/// Key=value settings loaded from `--config`. Keys use the long flag names
/// without the leading dashes; `#` starts a comment. Flags always win over
/// file entries, which win over built-in defaults.
#[derive(Debug)]
pub struct FileConfig {
    entries: BTreeMap<String, String>,
}

impl FileConfig {
    pub fn empty() -> Self {
        Self { entries: BTreeMap::new() }
    }

    pub fn load(path: &Path, known_keys: &[&str]) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Validation(format!(
                    "{}:{}: expected key=value, got `{line}`",
                    path.display(),
                    lineno + 1
                )));
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if !known_keys.contains(&key.as_str()) {
                return Err(CliError::Validation(format!(
                    "{}:{}: unknown key `{key}` for this command",
                    path.display(),
                    lineno + 1
                )));
            }
            if entries.insert(key.clone(), value).is_some() {
                return Err(CliError::Validation(format!(
                    "{}:{}: key `{key}` given twice",
                    path.display(),
                    lineno + 1
                )));
            }
        }
        Ok(Self { entries })
    }

    pub fn parse<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse().map(Some).map_err(|_| {
                CliError::Validation(format!("config key `{key}`: invalid value `{raw}`"))
            }),
        }
    }

    /// Flag value, then file value, then default.
    pub fn resolve<T: FromStr + Clone>(
        &self,
        flag: &Option<T>,
        key: &str,
        default: T,
    ) -> Result<T, CliError> {
        if let Some(v) = flag {
            return Ok(v.clone());
        }
        Ok(self.parse(key)?.unwrap_or(default))
    }

    /// Like [`resolve`](Self::resolve) but the setting must come from
    /// somewhere; the error names the missing flag.
    pub fn require<T: FromStr + Clone>(
        &self,
        flag: &Option<T>,
        key: &str,
    ) -> Result<T, CliError> {
        if let Some(v) = flag {
            return Ok(v.clone());
        }
        self.parse(key)?.ok_or_else(|| {
            CliError::Validation(format!("missing required `--{key}` (flag or config key)"))
        })
    }

    /// True if the flag was given or the file sets the key truthy.
    pub fn resolve_switch(&self, flag: bool, key: &str) -> Result<bool, CliError> {
        if flag {
            return Ok(true);
        }
        Ok(self.parse::<bool>(key)?.unwrap_or(false))
    }
}

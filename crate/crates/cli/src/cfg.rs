//! Flat key = value config files with flag > config > default precedence.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};

/// Parsed config file plus the resolved values actually used, for the
/// run fingerprint.
#[derive(Debug, Default)]
pub struct Settings {
    file: BTreeMap<String, String>,
    resolved: BTreeMap<String, String>,
}

impl Settings {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let mut file = BTreeMap::new();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading config `{}`", path.display()))?;
            for (lineno, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let Some((k, v)) = line.split_once('=') else {
                    bail!("{}:{}: expected `key = value`", path.display(), lineno + 1);
                };
                file.insert(k.trim().to_string(), v.trim().to_string());
            }
        }
        Ok(Settings { file, resolved: BTreeMap::new() })
    }

    /// Resolve one setting: CLI flag wins, then the config file, then
    /// the default. Records the outcome for fingerprinting.
    pub fn get<T: FromStr + ToString>(
        &mut self,
        key: &str,
        flag: Option<T>,
        default: T,
    ) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        let value = match flag {
            Some(v) => v,
            None => match self.file.get(key) {
                Some(raw) => raw
                    .parse::<T>()
                    .map_err(|e| anyhow::anyhow!("config key `{key}` = `{raw}`: {e}"))?,
                None => default,
            },
        };
        self.resolved.insert(key.to_string(), value.to_string());
        Ok(value)
    }

    pub fn get_path(&mut self, key: &str, flag: Option<PathBuf>) -> Result<Option<PathBuf>> {
        let value = match flag {
            Some(v) => Some(v),
            None => self.file.get(key).map(PathBuf::from),
        };
        if let Some(v) = &value {
            self.resolved.insert(key.to_string(), v.display().to_string());
        }
        Ok(value)
    }

    pub fn require_path(&mut self, key: &str, flag: Option<PathBuf>) -> Result<PathBuf> {
        self.get_path(key, flag)?
            .ok_or_else(|| anyhow::anyhow!("missing required setting `{key}` (flag --{key} or config)"))
    }

    /// Short hash over every resolved key=value pair.
    pub fn fingerprint(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut text = String::new();
        for (k, v) in &self.resolved {
            text.push_str(&format!("{k} = {v}\n"));
        }
        let digest = Sha256::digest(text.as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Parses `a,b,c` float lists for sweep grids.
pub fn parse_float_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| anyhow::anyhow!("bad number `{p}`: {e}")))
        .collect()
}

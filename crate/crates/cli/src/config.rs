//! Flat `key = value` run configuration merged with command-line flags.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

/// A bad parameter, unknown key or unreadable config file.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

fn normalize_key(key: &str) -> String {
    key.trim().replace('_', "-")
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, UsageError> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(UsageError(format!("config line {}: expected `key = value`", i + 1)));
        };
        let key = normalize_key(k);
        if key.is_empty() {
            return Err(UsageError(format!("config line {}: empty key", i + 1)));
        }
        if out.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(UsageError(format!("config line {}: duplicate key `{key}`", i + 1)));
        }
    }
    Ok(out)
}

pub fn read_config(path: &Path) -> Result<BTreeMap<String, String>, UsageError> {
    let text = std::fs::read_to_string(path).map_err(|e| UsageError(format!("cannot read config {}: {e}", path.display())))?;
    parse_config(&text)
}

/// Raw parameters of one run; typed getters record the resolved values.
#[derive(Debug, Default)]
pub struct Params {
    raw: BTreeMap<String, String>,
    resolved: BTreeMap<String, serde_json::Value>,
}

impl Params {
    /// Later sources override earlier ones.
    pub fn merged(sources: impl IntoIterator<Item = BTreeMap<String, String>>) -> Self {
        let mut raw = BTreeMap::new();
        for s in sources {
            raw.extend(s.into_iter().map(|(k, v)| (normalize_key(&k), v)));
        }
        Self {
            raw,
            resolved: BTreeMap::new(),
        }
    }

    fn parsed<T: FromStr>(&mut self, key: &str) -> Result<Option<T>, UsageError>
    where
        T::Err: fmt::Display,
    {
        match self.raw.remove(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<T>()
                .map(Some)
                .map_err(|e| UsageError(format!("invalid value `{v}` for `{key}`: {e}"))),
        }
    }

    pub fn f64(&mut self, key: &str, default: f64) -> Result<f64, UsageError> {
        let v = self.parsed::<f64>(key)?.unwrap_or(default);
        if !v.is_finite() {
            return Err(UsageError(format!("`{key}` must be finite")));
        }
        self.resolved.insert(key.into(), v.into());
        Ok(v)
    }

    pub fn opt_f64(&mut self, key: &str) -> Result<Option<f64>, UsageError> {
        let v = self.parsed::<f64>(key)?;
        if let Some(x) = v {
            if !x.is_finite() {
                return Err(UsageError(format!("`{key}` must be finite")));
            }
            self.resolved.insert(key.into(), x.into());
        }
        Ok(v)
    }

    pub fn usize(&mut self, key: &str, default: usize) -> Result<usize, UsageError> {
        let v = self.parsed::<usize>(key)?.unwrap_or(default);
        self.resolved.insert(key.into(), v.into());
        Ok(v)
    }

    pub fn u64(&mut self, key: &str, default: u64) -> Result<u64, UsageError> {
        let v = self.parsed::<u64>(key)?.unwrap_or(default);
        self.resolved.insert(key.into(), v.into());
        Ok(v)
    }

    pub fn flag(&mut self, key: &str) -> Result<bool, UsageError> {
        let v = self.parsed::<bool>(key)?.unwrap_or(false);
        self.resolved.insert(key.into(), v.into());
        Ok(v)
    }

    pub fn string(&mut self, key: &str, default: &str) -> String {
        let v = self.raw.remove(key).unwrap_or_else(|| default.to_string());
        self.resolved.insert(key.into(), v.clone().into());
        v
    }

    pub fn opt_string(&mut self, key: &str) -> Option<String> {
        let v = self.raw.remove(key);
        if let Some(s) = &v {
            self.resolved.insert(key.into(), s.clone().into());
        }
        v
    }

    /// Fails on keys no getter consumed.
    pub fn finish(&self) -> Result<(), UsageError> {
        if self.raw.is_empty() {
            Ok(())
        } else {
            let keys: Vec<&str> = self.raw.keys().map(String::as_str).collect();
            Err(UsageError(format!("unknown parameter(s): {}", keys.join(", "))))
        }
    }

    pub fn resolved(&self) -> serde_json::Value {
        serde_json::Value::Object(self.resolved.clone().into_iter().collect())
    }
}

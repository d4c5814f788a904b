//! Flat `key=value` text files used for model parameters and experiment
//! configuration. Blank lines and `#` comments are ignored.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct KeyValues {
    entries: BTreeMap<String, String>,
}

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::Parse(format!("line {}: expected key=value, got {raw:?}", lineno + 1))
            })?;
            let key = k.trim().to_string();
            if entries.insert(key.clone(), v.trim().to_string()).is_some() {
                return Err(Error::Parse(format!("line {}: duplicate key {key}", lineno + 1)));
            }
        }
        Ok(Self { entries })
    }

    pub fn insert(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.entries.insert(key.into(), value.into());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn f64(&self, key: &str) -> Result<Option<f64>> {
        self.get(key)
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| Error::Parse(format!("{key}: not a number: {v:?}")))
            })
            .transpose()
    }

    pub fn require_f64(&self, key: &str) -> Result<f64> {
        self.f64(key)?
            .ok_or_else(|| Error::Parse(format!("missing required key {key}")))
    }

    /// Per-index values from `name.default` and `name.<i>` overrides.
    pub fn indexed(&self, name: &str, count: usize, fallback: Option<f64>) -> Result<Vec<f64>> {
        let default = self.f64(&format!("{name}.default"))?.or(fallback);
        let mut out = Vec::with_capacity(count);
        for i in 0..count {
            match self.f64(&format!("{name}.{i}"))?.or(default) {
                Some(x) => out.push(x),
                None => {
                    return Err(Error::Parse(format!(
                        "no value for {name}.{i} and no {name}.default"
                    )))
                }
            }
        }
        for key in self.keys() {
            if let Some(rest) = key.strip_prefix(name).and_then(|r| r.strip_prefix('.')) {
                if rest != "default" {
                    match rest.parse::<usize>() {
                        Ok(i) if i < count => {}
                        _ => return Err(Error::Parse(format!("{key}: index out of range"))),
                    }
                }
            }
        }
        Ok(out)
    }

    /// Rejects keys not accepted by `allowed`.
    pub fn reject_unknown(&self, allowed: impl Fn(&str) -> bool) -> Result<()> {
        match self.keys().find(|k| !allowed(k)) {
            Some(k) => Err(Error::Parse(format!("unknown key {k}"))),
            None => Ok(()),
        }
    }

    /// Canonical `key=value` lines in key order.
    pub fn canonical(&self) -> String {
        self.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }
}

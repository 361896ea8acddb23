//! Flat key-value config files with dotted section prefixes.
//!
//! The format is line-oriented and diffable:
//!
//! ```text
//! # chain fine-tuning run
//! env.name = chain
//! algo.name = awac
//! algo.lambda = 0.3
//! run.seeds = 0,1,2,3,4
//! ```
//!
//! Parsing collects `key = value` pairs; consumers take the keys they
//! understand and anything left over is an error, so typos never silently
//! fall back to defaults.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use super::HarnessError;

#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    entries: BTreeMap<String, String>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let mut entries = BTreeMap::new();
        for (i, raw_line) in text.lines().enumerate() {
            let line = raw_line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(HarnessError::Config(format!(
                    "line {}: expected `key = value`, got {line:?}",
                    i + 1
                )));
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() {
                return Err(HarnessError::Config(format!("line {}: empty key", i + 1)));
            }
            if entries.insert(key.clone(), value).is_some() {
                return Err(HarnessError::Config(format!("line {}: duplicate key {key:?}", i + 1)));
            }
        }
        Ok(RawConfig { entries })
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        RawConfig::parse(&fs::read_to_string(path)?)
    }

    pub fn from_pairs(pairs: &[(&str, &str)]) -> Self {
        RawConfig {
            entries: pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
        }
    }

    /// Consumes a key. Consumers must drain every key they accept so
    /// [`Self::reject_leftovers`] can flag the rest.
    pub fn take(&mut self, key: &str) -> Option<String> {
        self.entries.remove(key)
    }

    /// Inserts or replaces a key; command-line flags use this to override
    /// file values.
    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.entries.insert(key.to_string(), value.into());
    }

    pub fn take_string(&mut self, key: &str, default: &str) -> String {
        self.take(key).unwrap_or_else(|| default.to_string())
    }

    pub fn take_usize(&mut self, key: &str, default: usize) -> Result<usize, HarnessError> {
        match self.take(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| HarnessError::Config(format!("{key}: {v:?} is not a nonnegative integer"))),
        }
    }

    pub fn take_f64(&mut self, key: &str, default: f64) -> Result<f64, HarnessError> {
        match self.take(key) {
            None => Ok(default),
            Some(v) => {
                v.parse().map_err(|_| HarnessError::Config(format!("{key}: {v:?} is not a number")))
            }
        }
    }

    pub fn take_bool(&mut self, key: &str, default: bool) -> Result<bool, HarnessError> {
        match self.take(key).as_deref() {
            None => Ok(default),
            Some("true") => Ok(true),
            Some("false") => Ok(false),
            Some(v) => Err(HarnessError::Config(format!("{key}: {v:?} is not true/false"))),
        }
    }

    /// Comma-separated u64 list, e.g. `0,1,2,3,4`.
    pub fn take_seeds(&mut self, key: &str, default: &[u64]) -> Result<Vec<u64>, HarnessError> {
        let Some(v) = self.take(key) else {
            return Ok(default.to_vec());
        };
        let mut seeds = Vec::new();
        for part in v.split(',') {
            let part = part.trim();
            seeds.push(part.parse::<u64>().map_err(|_| {
                HarnessError::Config(format!("{key}: {part:?} is not a seed (u64)"))
            })?);
        }
        if seeds.is_empty() {
            return Err(HarnessError::Config(format!("{key}: at least one seed required")));
        }
        let mut sorted = seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != seeds.len() {
            return Err(HarnessError::Config(format!("{key}: seeds must be distinct")));
        }
        Ok(seeds)
    }

    /// Errors if any keys were never consumed, naming them all.
    pub fn reject_leftovers(&self) -> Result<(), HarnessError> {
        if self.entries.is_empty() {
            return Ok(());
        }
        let keys: Vec<&str> = self.entries.keys().map(|s| s.as_str()).collect();
        Err(HarnessError::Config(format!("unknown keys: {}", keys.join(", "))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_blanks_and_values() {
        let mut cfg = RawConfig::parse(
            "# a comment\n\nenv.name = chain\nalgo.lambda = 0.3\nrun.seeds = 1, 2, 3\n",
        )
        .unwrap();
        assert_eq!(cfg.take_string("env.name", "x"), "chain");
        assert_eq!(cfg.take_f64("algo.lambda", 1.0).unwrap(), 0.3);
        assert_eq!(cfg.take_seeds("run.seeds", &[0]).unwrap(), vec![1, 2, 3]);
        cfg.reject_leftovers().unwrap();
    }

    #[test]
    fn unknown_keys_are_rejected_by_name() {
        let mut cfg = RawConfig::parse("env.name = chain\nalgo.lambdda = 0.3\n").unwrap();
        let _ = cfg.take_string("env.name", "x");
        let err = cfg.reject_leftovers().unwrap_err();
        assert!(format!("{err}").contains("algo.lambdda"));
    }

    #[test]
    fn malformed_lines_and_duplicates_error_with_line_numbers() {
        let err = RawConfig::parse("env.name chain\n").unwrap_err();
        assert!(format!("{err}").contains("line 1"));
        let err = RawConfig::parse("a = 1\na = 2\n").unwrap_err();
        assert!(format!("{err}").contains("duplicate"));
    }

    #[test]
    fn set_overrides_file_values() {
        let mut cfg = RawConfig::parse("algo.name = sac\n").unwrap();
        cfg.set("algo.name", "awac");
        cfg.set("run.seeds", "7");
        assert_eq!(cfg.take_string("algo.name", "x"), "awac");
        assert_eq!(cfg.take_seeds("run.seeds", &[]).unwrap(), vec![7]);
        cfg.reject_leftovers().unwrap();
    }

    #[test]
    fn typed_getters_validate() {
        let mut cfg = RawConfig::parse("n = -3\nb = yes\ns = 1,1\n").unwrap();
        assert!(cfg.take_usize("n", 0).is_err());
        assert!(cfg.take_bool("b", false).is_err());
        assert!(cfg.take_seeds("s", &[]).is_err());
        let mut cfg = RawConfig::parse("").unwrap();
        assert_eq!(cfg.take_usize("missing", 42).unwrap(), 42);
        assert!(!cfg.take_bool("missing", false).unwrap());
    }
}

//! Plain-text key-value configuration with flag overrides.
//!
//! The file format is one `key = value` pair per line, `#` comments, dotted
//! keys for grouping (`grid.n = 64`). Command-line flags override file
//! values; the effective configuration is echoed into `report.json`. See
//! `docs/config.md` for the schema.

use crate::dynamics::MIN_TRUNCATION;
use crate::error::{Error, Result};
use crate::kernel::WeightKernel;
use std::collections::BTreeMap;

#[derive(Debug, Clone, Default)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::ConfigInvalid(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            let key = key.trim();
            if key.is_empty() {
                return Err(Error::ConfigInvalid(format!("line {}: empty key", lineno + 1)));
            }
            values.insert(key.to_string(), value.trim().to_string());
        }
        Ok(Config { values })
    }

    pub fn set<S: ToString>(&mut self, key: &str, value: S) {
        self.values.insert(key.to_string(), value.to_string());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn get_f64(&self, key: &str, default: f64) -> Result<f64> {
        match self.values.get(key) {
            None => Ok(default),
            Some(s) => s
                .parse()
                .map_err(|_| Error::ConfigInvalid(format!("{key} = {s}: not a number"))),
        }
    }

    pub fn get_usize(&self, key: &str, default: usize) -> Result<usize> {
        match self.values.get(key) {
            None => Ok(default),
            Some(s) => s
                .parse()
                .map_err(|_| Error::ConfigInvalid(format!("{key} = {s}: not an integer"))),
        }
    }

    pub fn get_u64(&self, key: &str, default: u64) -> Result<u64> {
        match self.values.get(key) {
            None => Ok(default),
            Some(s) => s
                .parse()
                .map_err(|_| Error::ConfigInvalid(format!("{key} = {s}: not an integer"))),
        }
    }

    pub fn get_str(&self, key: &str, default: &str) -> String {
        self.values
            .get(key)
            .cloned()
            .unwrap_or_else(|| default.to_string())
    }

    /// Comma-separated list of `1/N` grid spacings, e.g. `1/16,1/32`.
    pub fn get_grid_list(&self, key: &str, default: &[usize]) -> Result<Vec<usize>> {
        match self.values.get(key) {
            None => Ok(default.to_vec()),
            Some(s) => s
                .split(',')
                .map(|item| {
                    let item = item.trim();
                    let denom = item.strip_prefix("1/").unwrap_or(item);
                    denom.parse::<usize>().map_err(|_| {
                        Error::ConfigInvalid(format!("{key}: `{item}` is not N or 1/N"))
                    })
                })
                .collect(),
        }
    }

    pub fn kernel(&self, key: &str) -> Result<WeightKernel> {
        match self.get_str(key, "indicator").as_str() {
            "indicator" => Ok(WeightKernel::Indicator),
            "exponential" => Ok(WeightKernel::Exponential),
            path if path.starts_with('@') => {
                let text = std::fs::read_to_string(&path[1..])?;
                WeightKernel::from_table_str(&text)
            }
            other => Err(Error::ConfigInvalid(format!(
                "{key} = {other}: expected `indicator`, `exponential`, or `@file`"
            ))),
        }
    }

    /// Validates the shared physics block before any computation.
    pub fn validate_physics(&self) -> Result<()> {
        let n = self.get_usize("grid.n", 64)?;
        if n < 4 {
            return Err(Error::ConfigInvalid(format!("grid.n = {n} must be >= 4")));
        }
        let zeta = self.get_f64("grid.zeta", 0.25)?;
        if !(0.0..0.5).contains(&zeta) {
            return Err(Error::ConfigInvalid(format!(
                "grid.zeta = {zeta} outside [0, 1/2)"
            )));
        }
        let dt = self.get_f64("time.dt", 1e-4)?;
        if !(dt > 0.0) {
            return Err(Error::ConfigInvalid("time.dt must be > 0".into()));
        }
        if let Some(z) = self.values.get("physics.truncation") {
            let z: f64 = z
                .parse()
                .map_err(|_| Error::ConfigInvalid("physics.truncation: not a number".into()))?;
            if z <= MIN_TRUNCATION {
                return Err(Error::ConfigInvalid(format!(
                    "physics.truncation = {z} must exceed 2/sqrt(3)"
                )));
            }
        }
        Ok(())
    }

    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.values
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_override() {
        let mut cfg = Config::parse("# comment\ngrid.n = 64\n grid.zeta=0.25 # inline\n").unwrap();
        assert_eq!(cfg.get_usize("grid.n", 0).unwrap(), 64);
        assert_eq!(cfg.get_f64("grid.zeta", 0.0).unwrap(), 0.25);
        cfg.set("grid.n", 128usize);
        assert_eq!(cfg.get_usize("grid.n", 0).unwrap(), 128);
        assert!(cfg.validate_physics().is_ok());
    }

    #[test]
    fn grid_lists() {
        let cfg = Config::parse("study.hs = 1/16, 1/32,64\n").unwrap();
        assert_eq!(cfg.get_grid_list("study.hs", &[]).unwrap(), vec![16, 32, 64]);
    }

    #[test]
    fn bad_values_rejected() {
        assert!(Config::parse("key value\n").is_err());
        let cfg = Config::parse("grid.zeta = 0.7\n").unwrap();
        assert!(matches!(cfg.validate_physics(), Err(Error::ConfigInvalid(_))));
        let cfg = Config::parse("physics.truncation = 1.0\n").unwrap();
        assert!(cfg.validate_physics().is_err());
    }
}

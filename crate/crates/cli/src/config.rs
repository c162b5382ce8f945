//! Layered experiment configuration: defaults, then a `key = value` file,
//! then `EBC_SEED`, then command-line flags.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use ebc_core::funcspec::parse_fspec;
use ebc_core::{Alpha, FunctionalSpec};
use sha2::{Digest, Sha256};

/// Keys that change what is computed; output locations are excluded from the hash.
const HASHED: &[&str] =
    &["alpha", "column", "criteria", "eps", "functional", "input", "n", "reference", "replicates", "rmax", "seed", "suite", "theta", "times"];

const KNOWN: &[&str] = &[
    "alpha", "column", "criteria", "eps", "format", "functional", "input", "log", "n", "out", "plot", "qq", "reference",
    "replicates", "rmax", "save-log", "seed", "suite", "theta", "times",
];

#[derive(Debug)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config field '{}': {}", self.field, self.message)
    }
}

impl std::error::Error for ConfigError {}

fn err(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError { field: field.into(), message: message.into() }
}

/// Resolved settings of one invocation.
#[derive(Debug, Clone, Default)]
pub struct ExperimentConfig {
    values: BTreeMap<String, String>,
}

impl ExperimentConfig {
    pub fn defaults() -> Self {
        let mut values = BTreeMap::new();
        for (k, v) in [
            ("alpha", "1.5"),
            ("n", "1000"),
            ("replicates", "100"),
            ("functional", "tau"),
            ("times", "0"),
            ("eps", "0.01"),
            ("format", "csv"),
            ("suite", "smoke"),
            ("reference", "100000"),
        ] {
            values.insert(k.into(), v.into());
        }
        Self { values }
    }

    /// Parses a flat `key = value` file. `[section]` lines and `#` comments
    /// are allowed; sections only group keys visually.
    pub fn merge_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| err("config", format!("{}: {e}", path.display())))?;
        self.merge_text(&text)
    }

    pub fn merge_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() || (line.starts_with('[') && line.ends_with(']')) {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| err("config", format!("line {}: expected key = value", i + 1)))?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let key = key.replace('_', "-");
        if !KNOWN.contains(&key.as_str()) {
            return Err(err(&key, "unknown key"));
        }
        self.values.insert(key, value.to_string());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<T, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        let raw = self.get(key).ok_or_else(|| err(key, "missing"))?;
        raw.parse().map_err(|e| err(key, format!("cannot parse '{raw}': {e}")))
    }

    pub fn alpha(&self) -> Result<Alpha, ConfigError> {
        let a: f64 = self.parsed("alpha")?;
        Alpha::new(a).map_err(|e| err("alpha", e.to_string()))
    }

    pub fn n(&self) -> Result<usize, ConfigError> {
        let n: usize = self.parsed("n")?;
        if n < 2 {
            return Err(err("n", "must be at least 2"));
        }
        Ok(n)
    }

    pub fn replicates(&self) -> Result<usize, ConfigError> {
        let r: usize = self.parsed("replicates")?;
        if r == 0 {
            return Err(err("replicates", "must be at least 1"));
        }
        Ok(r)
    }

    pub fn seed(&self) -> Result<u64, ConfigError> {
        self.seed_or(1)
    }

    /// The configured seed, or `default` when none was given.
    pub fn seed_or(&self, default: u64) -> Result<u64, ConfigError> {
        let Some(raw) = self.get("seed") else { return Ok(default) };
        let parsed = match raw.strip_prefix("0x") {
            Some(hex) => u64::from_str_radix(&hex.replace('_', ""), 16),
            None => raw.parse(),
        };
        parsed.map_err(|e| err("seed", format!("cannot parse '{raw}': {e}")))
    }

    pub fn eps(&self) -> Result<f64, ConfigError> {
        let e: f64 = self.parsed("eps")?;
        if !(e > 0.0 && e.is_finite()) {
            return Err(err("eps", "must be positive"));
        }
        Ok(e)
    }

    pub fn rmax(&self) -> Result<Option<f64>, ConfigError> {
        match self.get("rmax") {
            None | Some("inf") | Some("") => Ok(None),
            Some(_) => {
                let r: f64 = self.parsed("rmax")?;
                if !(r > 0.0) {
                    return Err(err("rmax", "must be positive"));
                }
                Ok(Some(r))
            }
        }
    }

    pub fn functional(&self) -> Result<FunctionalSpec, ConfigError> {
        let text = self.get("functional").ok_or_else(|| err("functional", "missing"))?;
        parse_fspec(text, self.alpha()?).map_err(|e| err("functional", e.to_string()))
    }

    pub fn times(&self) -> Result<Vec<f64>, ConfigError> {
        let raw = self.get("times").ok_or_else(|| err("times", "missing"))?;
        let times = float_list("times", raw)?;
        if times.is_empty() || times.windows(2).any(|w| w[0] > w[1]) {
            return Err(err("times", "need one or more nondecreasing values"));
        }
        Ok(times)
    }

    /// Frequencies: `;` separates vectors, `,` separates coordinates.
    pub fn theta(&self, dim: usize) -> Result<Vec<Vec<f64>>, ConfigError> {
        let raw = self.get("theta").unwrap_or("-2,-1,-0.5,0.5,1,2");
        let out: Vec<Vec<f64>> = if dim == 1 && !raw.contains(';') {
            float_list("theta", raw)?.into_iter().map(|t| vec![t]).collect()
        } else {
            raw.split(';').map(|v| float_list("theta", v)).collect::<Result<_, _>>()?
        };
        if out.iter().any(|v| v.len() != dim) {
            return Err(err("theta", format!("every frequency needs {dim} coordinates")));
        }
        Ok(out)
    }

    pub fn reference(&self) -> Result<usize, ConfigError> {
        let r: usize = self.parsed("reference")?;
        if r < 50 {
            return Err(err("reference", "need at least 50 draws"));
        }
        Ok(r)
    }

    pub fn criteria(&self) -> Result<Vec<u8>, ConfigError> {
        match self.get("criteria") {
            None | Some("") | Some("all") => Ok(Vec::new()),
            Some(raw) => raw
                .split(',')
                .map(|s| s.trim().parse::<u8>().map_err(|e| err("criteria", format!("'{s}': {e}"))))
                .collect(),
        }
    }

    /// Canonical text of the hashed keys.
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.values {
            if HASHED.contains(&k.as_str()) {
                let _ = writeln!(s, "{k} = {v}");
            }
        }
        s
    }

    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn hashed_values(&self) -> BTreeMap<&str, &str> {
        self.values.iter().filter(|(k, _)| HASHED.contains(&k.as_str())).map(|(k, v)| (k.as_str(), v.as_str())).collect()
    }
}

fn float_list(field: &str, raw: &str) -> Result<Vec<f64>, ConfigError> {
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|e| err(field, format!("'{s}': {e}"))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_layer_and_sections() {
        let mut c = ExperimentConfig::defaults();
        c.merge_text("[run]\nalpha = 1.3  # comment\nn=50\n\n[limit]\nrmax = inf\n").unwrap();
        assert_eq!(c.alpha().unwrap().value(), 1.3);
        assert_eq!(c.n().unwrap(), 50);
        assert_eq!(c.rmax().unwrap(), None);
        assert!(c.merge_text("bogus = 1").is_err());
        assert!(c.merge_text("alpha").is_err());
    }

    #[test]
    fn field_level_errors() {
        let mut c = ExperimentConfig::defaults();
        c.set("alpha", "2.5").unwrap();
        assert_eq!(c.alpha().unwrap_err().field, "alpha");
        c.set("alpha", "1.7").unwrap();
        c.set("functional", "length").unwrap();
        assert_eq!(c.functional().unwrap_err().field, "functional");
        c.set("n", "1").unwrap();
        assert_eq!(c.n().unwrap_err().field, "n");
    }

    #[test]
    fn hash_ignores_output_paths() {
        let mut a = ExperimentConfig::defaults();
        let h = a.hash();
        a.set("out", "x.csv").unwrap();
        assert_eq!(a.hash(), h);
        a.set("seed", "2").unwrap();
        assert_ne!(a.hash(), h);
    }

    #[test]
    fn theta_vectors() {
        let mut c = ExperimentConfig::defaults();
        c.set("theta", "1,0;0.5,-0.5").unwrap();
        assert_eq!(c.theta(2).unwrap(), vec![vec![1.0, 0.0], vec![0.5, -0.5]]);
        assert!(c.theta(3).is_err());
        c.set("seed", "0x00EB_C5EE").unwrap();
        assert_eq!(c.seed().unwrap(), 0x00EB_C5EE);
    }
}

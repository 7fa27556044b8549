//! `key = value` configuration files and their merge with command-line flags.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

/// Keys a config file may set. Names match the long flags.
pub const KNOWN_KEYS: &[&str] = &[
    "system",
    "vars",
    "coupling",
    "n",
    "seed",
    "realizations",
    "burn-in",
    "method",
    "L",
    "A",
    "m",
    "k-nn",
    "stop-information",
    "horizon",
    "out",
    "format",
    "csv",
    "downsample",
];

/// Parsed config file. Later lines override earlier ones.
#[derive(Debug, Default, Clone)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn read(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read config file {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| ConfigError(format!("{}: {}", path.display(), e.0)))
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ConfigError(format!("line {}: expected key = value", i + 1)))?;
            let key = key.trim().trim_start_matches("--").replace('_', "-");
            let key = KNOWN_KEYS
                .iter()
                .find(|k| k.eq_ignore_ascii_case(&key))
                .ok_or_else(|| ConfigError(format!("line {}: unknown key {key:?}", i + 1)))?;
            values.insert(key.to_string(), value.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        self.values
            .get(key)
            .map(|v| v.parse::<T>().map_err(|e| ConfigError(format!("config key {key}: {e}"))))
            .transpose()
    }

    /// Comma-separated list value.
    pub fn get_list<T: FromStr>(&self, key: &str) -> Result<Vec<T>, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        match self.values.get(key) {
            None => Ok(Vec::new()),
            Some(v) => v
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| s.parse::<T>().map_err(|e| ConfigError(format!("config key {key}: {e}"))))
                .collect(),
        }
    }
}

/// Flag value if given, else the file value, else `None`.
pub fn pick<T: FromStr>(flag: Option<T>, file: &ConfigFile, key: &str) -> Result<Option<T>, ConfigError>
where
    T::Err: std::fmt::Display,
{
    match flag {
        Some(v) => Ok(Some(v)),
        None => file.get(key),
    }
}

pub fn pick_list<T: FromStr>(flag: Vec<T>, file: &ConfigFile, key: &str) -> Result<Vec<T>, ConfigError>
where
    T::Err: std::fmt::Display,
{
    if flag.is_empty() {
        file.get_list(key)
    } else {
        Ok(flag)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_overrides() {
        let f = ConfigFile::parse("# header\nL = 4\nA=0.9 # trailing\n\nmethod = pmime, lm-pmime\nL = 6\n").unwrap();
        assert_eq!(f.get::<usize>("L").unwrap(), Some(6));
        assert_eq!(f.get::<f64>("A").unwrap(), Some(0.9));
        assert_eq!(f.get_list::<String>("method").unwrap(), vec!["pmime", "lm-pmime"]);
        assert_eq!(pick(Some(3usize), &f, "L").unwrap(), Some(3));
        assert_eq!(pick(None::<usize>, &f, "m").unwrap(), None);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_lines() {
        assert!(ConfigFile::parse("lag = 3").unwrap_err().0.contains("unknown key"));
        assert!(ConfigFile::parse("L 3").unwrap_err().0.contains("line 1"));
        let f = ConfigFile::parse("L = x").unwrap();
        assert!(f.get::<usize>("L").is_err());
    }

    #[test]
    fn key_spelling_is_lenient() {
        let f = ConfigFile::parse("k_nn = 4\n--seed = 9\nl = 2").unwrap();
        assert_eq!(f.get::<usize>("k-nn").unwrap(), Some(4));
        assert_eq!(f.get::<u64>("seed").unwrap(), Some(9));
        assert_eq!(f.get::<usize>("L").unwrap(), Some(2));
    }
}

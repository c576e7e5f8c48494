//! Flat `key = value` config files. `#` starts a comment; blank lines are
//! ignored; keys are unique.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

pub const KNOWN_KEYS: &[&str] = &[
    "experiment",
    "placement",
    "n",
    "m",
    "side",
    "policy",
    "k",
    "trials",
    "seed",
    "velocities",
    "mobility_model",
    "v_max",
    "dt",
    "warmup_per_user",
    "n_values",
    "policies",
    "k_fixed",
];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    entries: BTreeMap<String, (String, usize)>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config { line: line_no, message: format!("expected `key = value`, got `{line}`") });
            };
            let key = key.trim();
            let value = value.trim();
            if key.is_empty() {
                return Err(Error::Config { line: line_no, message: "empty key".into() });
            }
            if !KNOWN_KEYS.contains(&key) {
                return Err(Error::Config { line: line_no, message: format!("unknown key `{key}`") });
            }
            if let Some((_, first)) = entries.insert(key.to_string(), (value.to_string(), line_no)) {
                return Err(Error::Config { line: line_no, message: format!("duplicate key `{key}` (first on line {first})") });
            }
        }
        Ok(ConfigFile { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(v, _)| v.as_str())
    }

    pub fn line(&self, key: &str) -> usize {
        self.entries.get(key).map_or(0, |(_, l)| *l)
    }

    /// Parsed value, `None` when absent.
    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.entries.get(key) {
            None => Ok(None),
            Some((v, line)) => v
                .parse()
                .map(Some)
                .map_err(|e| Error::Config { line: *line, message: format!("bad value for `{key}`: {e}") }),
        }
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)?.ok_or_else(|| Error::Config { line: 0, message: format!("missing required key `{key}`") })
    }

    /// Comma-separated list.
    pub fn get_list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>>
    where
        T::Err: std::fmt::Display,
    {
        let Some((v, line)) = self.entries.get(key) else { return Ok(None) };
        if v.is_empty() {
            return Ok(Some(Vec::new()));
        }
        v.split(',')
            .map(|item| {
                item.trim()
                    .parse()
                    .map_err(|e| Error::Config { line: *line, message: format!("bad item `{}` in `{key}`: {e}", item.trim()) })
            })
            .collect::<Result<Vec<T>>>()
            .map(Some)
    }

    /// Attaches this key's line number to an error raised while validating it.
    pub fn at(&self, key: &str, err: Error) -> Error {
        match err {
            Error::InvalidArgument(message) | Error::DegenerateInput(message) => Error::Config { line: self.line(key), message },
            other => other,
        }
    }

    pub fn echo(&self) -> BTreeMap<String, String> {
        self.entries.iter().map(|(k, (v, _))| (k.clone(), v.clone())).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_lists() {
        let cfg = ConfigFile::parse("# header\nn = 100 # servers\n\nvelocities = 0.01, 0.1\npolicy=sPOT\n").unwrap();
        assert_eq!(cfg.get::<usize>("n").unwrap(), Some(100));
        assert_eq!(cfg.get_list::<f64>("velocities").unwrap(), Some(vec![0.01, 0.1]));
        assert_eq!(cfg.raw("policy"), Some("sPOT"));
        assert_eq!(cfg.line("velocities"), 4);
        assert_eq!(cfg.get::<usize>("trials").unwrap(), None);
    }

    #[test]
    fn errors_carry_line_numbers() {
        match ConfigFile::parse("n = 4\nnonsense line\n") {
            Err(Error::Config { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        match ConfigFile::parse("n = 4\nn = 5\n") {
            Err(Error::Config { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        match ConfigFile::parse("\n\nbogus = 1\n") {
            Err(Error::Config { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let cfg = ConfigFile::parse("seed = 1\ntrials = many\n").unwrap();
        match cfg.get::<usize>("trials") {
            Err(Error::Config { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }
}

//! Flat `key = value` configuration files.

use std::collections::BTreeMap;
use std::path::Path;

use crate::CliError;

pub const KEYS: [&str; 18] = [
    "a",
    "b",
    "quad-tol",
    "root-tol",
    "residual-tol",
    "a-min",
    "a-max",
    "a-steps",
    "b-min",
    "b-max",
    "b-steps",
    "format",
    "out",
    "k",
    "n",
    "m",
    "root-branching",
    "jbeta",
];

/// Parsed file contents; keys are normalised to their flag spelling.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FileConfig {
    values: BTreeMap<String, String>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
            let key = key.trim().replace('_', "-").to_ascii_lowercase();
            if !KEYS.contains(&key.as_str()) {
                return Err(CliError::Config(format!("line {}: unknown key `{key}`", lineno + 1)));
            }
            let value = value.trim().trim_matches('"').to_string();
            if values.insert(key.clone(), value).is_some() {
                return Err(CliError::Config(format!("line {}: duplicate key `{key}`", lineno + 1)));
            }
        }
        Ok(Self { values })
    }

    pub fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        self.values
            .get(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| CliError::Config(format!("invalid value `{v}` for `{key}`")))
            })
            .transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_spacing() {
        let c = FileConfig::parse("# scan\na_min = 1\n  a-max=20 # upper\n\nformat = \"csv\"\n").unwrap();
        assert_eq!(c.get::<f64>("a-min").unwrap(), Some(1.0));
        assert_eq!(c.get::<f64>("a-max").unwrap(), Some(20.0));
        assert_eq!(c.get::<String>("format").unwrap().as_deref(), Some("csv"));
        assert_eq!(c.get::<f64>("b").unwrap(), None);
    }

    #[test]
    fn rejects_bad_lines() {
        assert!(matches!(FileConfig::parse("a 1"), Err(CliError::Config(_))));
        assert!(matches!(FileConfig::parse("colour = red"), Err(CliError::Config(_))));
        assert!(matches!(FileConfig::parse("a = 1\na = 2"), Err(CliError::Config(_))));
        let c = FileConfig::parse("k = three").unwrap();
        assert!(c.get::<u32>("k").is_err());
    }
}

//! Flat `key = value` configuration merged with command-line flags.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{origin}: {message}")]
    Parse { origin: Origin, message: String },

    #[error("unknown key `{key}` ({origin}); accepted keys: {accepted}")]
    UnknownKey {
        key: String,
        origin: Origin,
        accepted: String,
    },

    #[error("cannot read config file {path}: {message}")]
    Read { path: String, message: String },

    #[error(transparent)]
    Invalid(#[from] fracspde_core::error::Error),
}

/// Where a value came from, for error messages.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Origin {
    File { path: String, line: usize },
    Flag(String),
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::File { path, line } => write!(f, "{path} line {line}"),
            Origin::Flag(name) => write!(f, "flag --{name}"),
        }
    }
}

#[derive(Debug, Clone)]
struct Entry {
    raw: String,
    origin: Origin,
}

/// Scalar parameters keyed by name, each remembering its origin.
#[derive(Debug, Clone, Default)]
pub struct ParamBag {
    entries: BTreeMap<String, Entry>,
}

impl ParamBag {
    /// Parses `key = value` lines; `#` starts a comment, blank lines are skipped.
    pub fn parse_file_text(path: &str, text: &str) -> Result<Self, ConfigError> {
        let mut entries: BTreeMap<String, Entry> = BTreeMap::new();
        for (idx, line) in text.lines().enumerate() {
            let origin = Origin::File {
                path: path.to_string(),
                line: idx + 1,
            };
            let body = line.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let Some((key, value)) = body.split_once('=') else {
                return Err(ConfigError::Parse {
                    origin,
                    message: format!("expected `key = value`, got `{body}`"),
                });
            };
            let key = key.trim();
            let value = value.trim();
            if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(ConfigError::Parse {
                    origin,
                    message: format!("invalid key `{key}`"),
                });
            }
            if value.is_empty() {
                return Err(ConfigError::Parse {
                    origin,
                    message: format!("missing value for `{key}`"),
                });
            }
            if let Some(prev) = entries.get(key) {
                return Err(ConfigError::Parse {
                    origin,
                    message: format!("duplicate key `{key}` (first set at {})", prev.origin),
                });
            }
            entries.insert(
                key.to_string(),
                Entry {
                    raw: value.to_string(),
                    origin,
                },
            );
        }
        Ok(Self { entries })
    }

    pub fn read_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::parse_file_text(&path.display().to_string(), &text)
    }

    /// Rejects any key outside `schema`.
    pub fn check_keys(&self, schema: &[&str]) -> Result<(), ConfigError> {
        for (key, entry) in &self.entries {
            if !schema.contains(&key.as_str()) {
                return Err(ConfigError::UnknownKey {
                    key: key.clone(),
                    origin: entry.origin.clone(),
                    accepted: schema.join(", "),
                });
            }
        }
        Ok(())
    }

    /// Flag values take precedence over file values.
    pub fn override_with(&mut self, flags: Vec<(&str, Option<String>)>) {
        for (key, value) in flags {
            if let Some(raw) = value {
                let origin = Origin::Flag(key.replace('_', "-"));
                self.entries.insert(key.to_string(), Entry { raw, origin });
            }
        }
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn get<T: FromStr>(&self, key: &str, default: T) -> Result<T, ConfigError>
    where
        T::Err: fmt::Display,
    {
        Ok(self.get_opt(key)?.unwrap_or(default))
    }

    pub fn get_opt<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        match self.entries.get(key) {
            None => Ok(None),
            Some(e) => e.raw.parse().map(Some).map_err(|err: T::Err| ConfigError::Parse {
                origin: e.origin.clone(),
                message: format!("bad value `{}` for `{key}`: {err}", e.raw),
            }),
        }
    }

    /// Comma-separated list.
    pub fn get_list<T: FromStr>(&self, key: &str, default: Vec<T>) -> Result<Vec<T>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        match self.entries.get(key) {
            None => Ok(default),
            Some(e) => e
                .raw
                .split(',')
                .map(|item| {
                    item.trim().parse().map_err(|err: T::Err| ConfigError::Parse {
                        origin: e.origin.clone(),
                        message: format!("bad list item `{}` for `{key}`: {err}", item.trim()),
                    })
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_has_no_entries() {
        let bag = ParamBag::parse_file_text("c", "\n# only a comment\n").unwrap();
        assert_eq!(bag.get("alpha", 0.5).unwrap(), 0.5);
        assert_eq!(bag.get("seed", 42u64).unwrap(), 42);
    }

    #[test]
    fn flag_beats_file() {
        let mut bag = ParamBag::parse_file_text("c", "gamma = 0.9\n").unwrap();
        bag.override_with(vec![("gamma", Some("0.4".into())), ("alpha", None)]);
        assert_eq!(bag.get("gamma", 0.0).unwrap(), 0.4);
        assert!(!bag.contains("alpha"));
    }

    #[test]
    fn malformed_value_reports_line() {
        let bag = ParamBag::parse_file_text("run.cfg", "alpha = 0.6\n\ngamma = abc\n").unwrap();
        let err = bag.get::<f64>("gamma", 0.5).unwrap_err().to_string();
        assert!(err.contains("run.cfg line 3"), "{err}");
    }

    #[test]
    fn missing_equals_reports_line() {
        let err = ParamBag::parse_file_text("run.cfg", "alpha = 0.6\ngamma 0.4\n")
            .unwrap_err()
            .to_string();
        assert!(err.contains("line 2"), "{err}");
    }

    #[test]
    fn unknown_key_rejected() {
        let bag = ParamBag::parse_file_text("c", "alpah = 0.6\n").unwrap();
        let err = bag.check_keys(&["alpha", "gamma"]).unwrap_err().to_string();
        assert!(err.contains("alpah") && err.contains("line 1"), "{err}");
    }

    #[test]
    fn duplicate_key_rejected() {
        assert!(ParamBag::parse_file_text("c", "m = 2\nm = 0\n").is_err());
    }

    #[test]
    fn lists_parse() {
        let bag = ParamBag::parse_file_text("c", "levels = 10, 20,40\n").unwrap();
        assert_eq!(bag.get_list::<usize>("levels", vec![]).unwrap(), vec![10, 20, 40]);
    }
}

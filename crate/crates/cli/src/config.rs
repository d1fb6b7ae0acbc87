//! Flat `key = value` configuration with per-entry provenance.
//!
//! Blank lines and lines starting with `#` are ignored. Later entries and
//! command-line flags override earlier ones. Every value read by a command is
//! recorded, so the resolved set can be written to a manifest and replayed.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::failure::Failure;

#[derive(Debug, Clone, PartialEq)]
pub enum Origin {
    File { path: String, line: usize },
    Flag,
    Manifest,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::File { path, line } => write!(f, "{path}:{line}"),
            Origin::Flag => write!(f, "command line"),
            Origin::Manifest => write!(f, "manifest"),
        }
    }
}

#[derive(Debug, Clone)]
struct Entry {
    value: String,
    origin: Origin,
}

/// Keys accepted in config files, `--set` and manifests.
pub const KNOWN_KEYS: &[&str] = &[
    "bundle",
    "burnin",
    "corruption",
    "diagnostics",
    "dim",
    "dissolve",
    "est",
    "expect_moves",
    "gibbs_sweeps",
    "k",
    "m_attach",
    "max_iter",
    "mcmc_burnin",
    "mcmc_samples",
    "members",
    "model",
    "models",
    "n_per_cluster",
    "n_sims",
    "net",
    "next",
    "nodes",
    "out",
    "p_between",
    "p_within",
    "pooled",
    "preset",
    "replicates",
    "restarts",
    "rho",
    "samples",
    "seed",
    "smooth",
    "spec",
    "stay",
    "step",
    "tasks",
    "tau",
    "theta",
    "thin",
    "times",
    "tol",
    "transition",
    "triangle",
    "truth",
    "within_only",
];

#[derive(Debug, Clone, Default)]
pub struct Config {
    entries: BTreeMap<String, Entry>,
    resolved: BTreeMap<String, String>,
}

fn check_key(key: &str, origin: &Origin) -> Result<(), Failure> {
    if KNOWN_KEYS.contains(&key) {
        Ok(())
    } else {
        Err(Failure::config(format!("{origin}: unknown key '{key}'")))
    }
}

impl Config {
    pub fn parse(text: &str, path: &str) -> Result<Self, Failure> {
        let mut cfg = Config::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let origin = Origin::File { path: path.to_string(), line: idx + 1 };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Failure::config(format!("{origin}: expected 'key = value', found '{line}'")))?;
            let key = key.trim();
            if key.is_empty() {
                return Err(Failure::config(format!("{origin}: missing key")));
            }
            check_key(key, &origin)?;
            cfg.entries.insert(key.to_string(), Entry { value: value.trim().to_string(), origin });
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn from_resolved(map: &BTreeMap<String, String>) -> Result<Self, Failure> {
        let mut cfg = Config::default();
        for (k, v) in map {
            check_key(k, &Origin::Manifest)?;
            cfg.entries.insert(k.clone(), Entry { value: v.clone(), origin: Origin::Manifest });
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: impl ToString) -> Result<(), Failure> {
        check_key(key, &Origin::Flag)?;
        self.entries.insert(key.to_string(), Entry { value: value.to_string(), origin: Origin::Flag });
        Ok(())
    }

    /// Applies `key=value` overrides.
    pub fn set_pairs(&mut self, pairs: &[String]) -> Result<(), Failure> {
        for p in pairs {
            let (k, v) =
                p.split_once('=').ok_or_else(|| Failure::config(format!("--set expects key=value, got '{p}'")))?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    pub fn flag<T: ToString>(&mut self, key: &str, value: Option<T>) -> Result<(), Failure> {
        match value {
            Some(v) => self.set(key, v),
            None => Ok(()),
        }
    }

    fn parse_entry<T: FromStr>(&self, key: &str) -> Result<Option<T>, Failure>
    where
        T::Err: fmt::Display,
    {
        match self.entries.get(key) {
            None => Ok(None),
            Some(e) => e
                .value
                .parse::<T>()
                .map(Some)
                .map_err(|err| Failure::config(format!("{}: invalid value '{}' for {key}: {err}", e.origin, e.value))),
        }
    }

    /// Optional value; recorded when present.
    pub fn get<T: FromStr + ToString>(&mut self, key: &str) -> Result<Option<T>, Failure>
    where
        T::Err: fmt::Display,
    {
        let v = self.parse_entry::<T>(key)?;
        if let Some(x) = &v {
            self.resolved.insert(key.to_string(), x.to_string());
        }
        Ok(v)
    }

    pub fn get_or<T: FromStr + ToString>(&mut self, key: &str, default: T) -> Result<T, Failure>
    where
        T::Err: fmt::Display,
    {
        let v = self.parse_entry::<T>(key)?.unwrap_or(default);
        self.resolved.insert(key.to_string(), v.to_string());
        Ok(v)
    }

    /// An input file path, recorded in absolute form so replays do not
    /// depend on the working directory.
    pub fn input_path(&mut self, key: &str) -> Result<Option<std::path::PathBuf>, Failure> {
        let Some(raw) = self.parse_entry::<String>(key)? else { return Ok(None) };
        let abs = std::fs::canonicalize(&raw).map_err(|e| Failure::data(format!("cannot open {key} file '{raw}': {e}")))?;
        self.resolved.insert(key.to_string(), abs.display().to_string());
        Ok(Some(abs))
    }

    pub fn require_input(&mut self, key: &str) -> Result<std::path::PathBuf, Failure> {
        self.input_path(key)?.ok_or_else(|| Failure::config(format!("missing required setting '{key}'")))
    }

    pub fn resolved(&self) -> &BTreeMap<String, String> {
        &self.resolved
    }
}

/// Comma-separated list.
pub fn parse_list<T: FromStr>(s: &str, key: &str) -> Result<Vec<T>, Failure>
where
    T::Err: fmt::Display,
{
    s.split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(|x| x.parse::<T>().map_err(|e| Failure::config(format!("invalid entry '{x}' in {key}: {e}"))))
        .collect()
}

/// Semicolon-separated rows of comma-separated numbers.
pub fn parse_rows(s: &str, key: &str) -> Result<Vec<Vec<f64>>, Failure> {
    s.split(';').map(str::trim).filter(|r| !r.is_empty()).map(|r| parse_list(r, key)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_overrides() {
        let mut cfg = Config::parse("# comment\nk = 4\n\nseed=9\n", "c.txt").unwrap();
        cfg.set("k", 5).unwrap();
        assert_eq!(cfg.get_or("k", 3usize).unwrap(), 5);
        assert_eq!(cfg.get_or("seed", 1u64).unwrap(), 9);
        assert_eq!(cfg.get_or("dim", 2usize).unwrap(), 2);
        assert_eq!(cfg.resolved().get("dim").map(String::as_str), Some("2"));
    }

    #[test]
    fn errors_name_the_line() {
        let err = Config::parse("k = 3\nnonsense\n", "c.txt").unwrap_err();
        assert_eq!(err.code, 2);
        assert!(err.message.contains("c.txt:2"), "{}", err.message);
        let err = Config::parse("k = 3\nbogus = 1\n", "c.txt").unwrap_err();
        assert!(err.message.contains("c.txt:2") && err.message.contains("bogus"));
        let mut cfg = Config::parse("\nk = three\n", "c.txt").unwrap();
        let err = cfg.get_or("k", 3usize).unwrap_err();
        assert!(err.message.contains("c.txt:2"), "{}", err.message);
    }

    #[test]
    fn rows_and_lists() {
        assert_eq!(parse_rows("0.9,0.1; 0.2,0.8", "transition").unwrap(), vec![vec![0.9, 0.1], vec![0.2, 0.8]]);
        assert_eq!(parse_list::<f64>("0, 0.1,0.2", "corruption").unwrap(), vec![0.0, 0.1, 0.2]);
        assert!(parse_list::<f64>("0,x", "corruption").is_err());
    }
}

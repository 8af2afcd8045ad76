//! Line-oriented `key = value` configuration files.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{CliError, Result};

pub const KNOWN_KEYS: &[&str] = &[
    "k",
    "stride",
    "seed",
    "iterations",
    "p",
    "gamma",
    "anneal_quality",
    "max_patches",
    "max_reproposals",
    "subsampling",
    "workers",
    "qualities",
    "quality",
];

#[derive(Debug, Clone, Default)]
pub struct Settings {
    path: Option<PathBuf>,
    values: BTreeMap<String, (usize, String)>,
}

impl Settings {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let err = |line: usize, message: String| CliError::Config {
            path: path.to_path_buf(),
            line,
            message,
        };
        let mut values = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(err(n + 1, format!("expected `key = value`, got `{line}`")));
            };
            let key = key.trim().to_string();
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(err(n + 1, format!("unknown key `{key}`")));
            }
            if values.insert(key.clone(), (n + 1, value.trim().to_string())).is_some() {
                return Err(err(n + 1, format!("duplicate key `{key}`")));
            }
        }
        Ok(Self {
            path: Some(path.to_path_buf()),
            values,
        })
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        let Some((line, raw)) = self.values.get(key) else {
            return Ok(None);
        };
        raw.parse().map(Some).map_err(|e: T::Err| CliError::Config {
            path: self.path.clone().unwrap_or_default(),
            line: *line,
            message: format!("bad value for `{key}`: {e}"),
        })
    }

    /// Flag, then config file, then `default`.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        match flag {
            Some(v) => Ok(v),
            None => Ok(self.get(key)?.unwrap_or(default)),
        }
    }

    pub fn qualities(&self, flag: Option<&str>) -> Result<Vec<u8>> {
        let raw = match flag {
            Some(s) => s.to_string(),
            None => self.get::<String>("qualities")?.unwrap_or_else(|| "35,50,75,95".into()),
        };
        parse_qualities(&raw)
    }
}

pub fn parse_qualities(raw: &str) -> Result<Vec<u8>> {
    let qs = raw
        .split(',')
        .map(|q| {
            q.trim()
                .parse::<u8>()
                .ok()
                .filter(|q| (1..=100).contains(q))
                .ok_or_else(|| CliError::usage(format!("bad quality `{q}` (expected 1..=100)")))
        })
        .collect::<Result<Vec<u8>>>()?;
    if qs.is_empty() {
        return Err(CliError::usage("no qualities given"));
    }
    Ok(qs)
}

/// Worker count: flag, then config, then `JQF_WORKERS`, then available cores.
pub fn workers(settings: &Settings, flag: Option<usize>) -> Result<usize> {
    if let Some(w) = flag {
        return Ok(w.max(1));
    }
    if let Some(w) = settings.get::<usize>("workers")? {
        return Ok(w.max(1));
    }
    if let Ok(v) = std::env::var("JQF_WORKERS") {
        return v
            .trim()
            .parse::<usize>()
            .map(|w| w.max(1))
            .map_err(|_| CliError::usage(format!("JQF_WORKERS=`{v}` is not a positive integer")));
    }
    Ok(std::thread::available_parallelism().map_or(1, |n| n.get()))
}

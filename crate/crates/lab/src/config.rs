//! Plain-text `key = value` configuration with command-line overrides.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use toral_core::budget::DEFAULT_LIMIT;

use crate::error::{LabError, Result};
use crate::registry;

/// Keys handled by the runner rather than by an experiment.
pub const RESERVED: [&str; 5] = ["experiment", "seed", "budget", "output", "format"];

pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(LabError::bad_value("format", format!("{s:?} is neither csv nor json"))),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::Json => "json",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub params: BTreeMap<String, String>,
    pub seed: u64,
    pub budget: u64,
    pub output: Option<PathBuf>,
    pub format: Format,
}

impl ExperimentConfig {
    /// Builds a validated config from ordered assignments; later entries win.
    pub fn from_entries<I, K, V>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (K, V)>,
        K: Into<String>,
        V: Into<String>,
    {
        let mut merged: BTreeMap<String, String> = BTreeMap::new();
        for (k, v) in entries {
            merged.insert(k.into(), v.into());
        }
        let experiment = merged
            .remove("experiment")
            .ok_or_else(|| LabError::MissingKey { key: "experiment".into(), experiment: "<none>".into() })?;
        let seed = match merged.remove("seed") {
            Some(s) => parse_u64("seed", &s)?,
            None => DEFAULT_SEED,
        };
        let budget = match merged.remove("budget") {
            Some(s) => parse_u64("budget", &s)?,
            None => DEFAULT_LIMIT,
        };
        let output = merged.remove("output").map(PathBuf::from);
        let format = match merged.remove("format") {
            Some(s) => s.parse()?,
            None => Format::default(),
        };
        let config = ExperimentConfig { experiment, params: merged, seed, budget, output, format };
        registry::find(&config.experiment)?.validate(&config.params)?;
        Ok(config)
    }

    /// Every resolved setting, including defaults, as key/value text.
    pub fn echo(&self) -> BTreeMap<String, String> {
        let mut out = self.params.clone();
        out.insert("experiment".into(), self.experiment.clone());
        out.insert("seed".into(), self.seed.to_string());
        out.insert("budget".into(), self.budget.to_string());
        out.insert("format".into(), self.format.to_string());
        if let Some(p) = &self.output {
            out.insert("output".into(), p.display().to_string());
        }
        out
    }
}

/// Parses a budget or seed; accepts plain integers and exact float forms like `1e9`.
pub fn parse_u64(key: &str, s: &str) -> Result<u64> {
    let s = s.trim();
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    match s.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.fract() == 0.0 && v < 1.8e19 => Ok(v as u64),
        _ => Err(LabError::bad_value(key, format!("{s:?} is not a non-negative integer"))),
    }
}

/// Splits `key=value`, trimming whitespace around both sides.
pub fn parse_assignment(s: &str) -> Option<(String, String)> {
    let (k, v) = s.split_once('=')?;
    let k = k.trim();
    if k.is_empty() || k.contains(char::is_whitespace) {
        return None;
    }
    Some((k.to_string(), v.trim().to_string()))
}

/// Assignments from config text; `#` starts a comment and blank lines are skipped.
pub fn parse_config_text(text: &str, source: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let pair = parse_assignment(line).ok_or_else(|| LabError::Syntax {
            path: source.into(),
            line: i + 1,
            reason: format!("expected `key = value`, found {line:?}"),
        })?;
        out.push(pair);
    }
    Ok(out)
}

pub fn load_config_file(path: &Path) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path).map_err(|source| LabError::Io { path: path.into(), source })?;
    parse_config_text(&text, &path.display().to_string())
}

//! Named experiments, their declared keys, and the runner.

use std::collections::BTreeMap;
use std::time::Instant;

use toral_core::report::ExperimentReport;
use toral_core::Budget;

use crate::config::ExperimentConfig;
use crate::error::{LabError, Result};
use crate::experiments;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Int,
    Real,
    Text,
    /// Comma-separated integers.
    IntList,
    Choice(&'static [&'static str]),
}

#[derive(Debug, Clone, Copy)]
pub struct Key {
    pub name: &'static str,
    pub kind: Kind,
    /// `None` marks a required key.
    pub default: Option<&'static str>,
    pub help: &'static str,
}

impl Key {
    pub const fn required(name: &'static str, kind: Kind, help: &'static str) -> Self {
        Key { name, kind, default: None, help }
    }

    pub const fn optional(name: &'static str, kind: Kind, default: &'static str, help: &'static str) -> Self {
        Key { name, kind, default: Some(default), help }
    }

    fn check(&self, value: &str) -> Result<()> {
        let bad = |reason: String| Err(LabError::bad_value(self.name, reason));
        match self.kind {
            Kind::Int if value.trim().parse::<i64>().is_err() => bad(format!("{value:?} is not an integer")),
            Kind::Real if value.trim().parse::<f64>().map_or(true, |x| !x.is_finite()) => {
                bad(format!("{value:?} is not a finite real"))
            }
            Kind::IntList if parse_int_list(value).is_none() => {
                bad(format!("{value:?} is not a comma-separated list of integers"))
            }
            Kind::Choice(options) if !options.contains(&value.trim()) => {
                bad(format!("{value:?} is not one of {}", options.join(", ")))
            }
            _ => Ok(()),
        }
    }
}

fn parse_int_list(s: &str) -> Option<Vec<i64>> {
    let s = s.trim();
    if s.is_empty() {
        return Some(Vec::new());
    }
    s.split(',').map(|p| p.trim().parse().ok()).collect()
}

pub type RunFn = fn(&Params, &Budget) -> Result<ExperimentReport>;

pub struct Experiment {
    pub name: &'static str,
    pub about: &'static str,
    pub keys: &'static [Key],
    /// Whether the seed changes the output.
    pub seeded: bool,
    pub run: RunFn,
}

impl Experiment {
    pub fn key(&self, name: &str) -> Option<&Key> {
        self.keys.iter().find(|k| k.name == name)
    }

    /// Rejects unknown keys, missing required keys and malformed values.
    pub fn validate(&self, params: &BTreeMap<String, String>) -> Result<()> {
        for (k, v) in params {
            let key = self.key(k).ok_or_else(|| LabError::UnknownKey {
                key: k.clone(),
                experiment: self.name.into(),
                accepted: self.keys.iter().map(|k| k.name).collect::<Vec<_>>().join(", "),
            })?;
            key.check(v)?;
        }
        if let Some(k) = self.keys.iter().find(|k| k.default.is_none() && !params.contains_key(k.name)) {
            return Err(LabError::MissingKey { key: k.name.into(), experiment: self.name.into() });
        }
        Ok(())
    }
}

/// Typed access to an experiment's parameters with declared defaults.
pub struct Params<'a> {
    experiment: &'a Experiment,
    values: &'a BTreeMap<String, String>,
    pub seed: u64,
}

impl<'a> Params<'a> {
    pub fn new(experiment: &'a Experiment, values: &'a BTreeMap<String, String>, seed: u64) -> Self {
        Params { experiment, values, seed }
    }

    fn raw(&self, name: &str) -> Result<&str> {
        let key = self.experiment.key(name).unwrap_or_else(|| panic!("{} does not declare `{name}`", self.experiment.name));
        match self.values.get(name) {
            Some(v) => Ok(v.trim()),
            None => key.default.ok_or_else(|| LabError::MissingKey { key: name.into(), experiment: self.experiment.name.into() }),
        }
    }

    pub fn int(&self, name: &str) -> Result<i64> {
        let s = self.raw(name)?;
        s.parse().map_err(|_| LabError::bad_value(name, format!("{s:?} is not an integer")))
    }

    pub fn uint(&self, name: &str) -> Result<u64> {
        let v = self.int(name)?;
        u64::try_from(v).map_err(|_| LabError::bad_value(name, format!("{v} is negative")))
    }

    pub fn count(&self, name: &str) -> Result<usize> {
        Ok(self.uint(name)? as usize)
    }

    /// Integer in `[lo, hi]`.
    pub fn int_in(&self, name: &str, lo: i64, hi: i64) -> Result<i64> {
        let v = self.int(name)?;
        if v < lo || v > hi {
            return Err(LabError::bad_value(name, format!("{v} is outside [{lo}, {hi}]")));
        }
        Ok(v)
    }

    pub fn real(&self, name: &str) -> Result<f64> {
        let s = self.raw(name)?;
        s.parse().map_err(|_| LabError::bad_value(name, format!("{s:?} is not a real")))
    }

    pub fn positive(&self, name: &str) -> Result<f64> {
        let v = self.real(name)?;
        if !(v > 0.0) {
            return Err(LabError::bad_value(name, format!("{v} is not positive")));
        }
        Ok(v)
    }

    pub fn text(&self, name: &str) -> Result<String> {
        Ok(self.raw(name)?.to_string())
    }

    pub fn uint_list(&self, name: &str) -> Result<Vec<u64>> {
        let s = self.raw(name)?;
        let v = parse_int_list(s).ok_or_else(|| LabError::bad_value(name, format!("{s:?} is not a list of integers")))?;
        v.into_iter()
            .map(|x| u64::try_from(x).map_err(|_| LabError::bad_value(name, format!("{x} is negative"))))
            .collect()
    }

    /// Every declared key with its resolved value.
    pub fn resolved(&self) -> BTreeMap<String, String> {
        self.experiment
            .keys
            .iter()
            .filter_map(|k| self.raw(k.name).ok().map(|v| (k.name.to_string(), v.to_string())))
            .collect()
    }
}

pub fn registry() -> &'static [Experiment] {
    experiments::REGISTRY
}

pub fn names() -> Vec<&'static str> {
    registry().iter().map(|e| e.name).collect()
}

pub fn find(name: &str) -> Result<&'static Experiment> {
    registry()
        .iter()
        .find(|e| e.name == name)
        .ok_or_else(|| LabError::UnknownExperiment { name: name.into(), valid: names().join(", ") })
}

/// Validates the config, runs the experiment under its budget and stamps
/// the report with the resolved config, seed and runtime.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let experiment = find(&config.experiment)?;
    experiment.validate(&config.params)?;
    let params = Params::new(experiment, &config.params, config.seed);
    let budget = Budget::new(config.budget);
    let start = Instant::now();
    let mut report = (experiment.run)(&params, &budget)?;
    report.runtime_seconds = start.elapsed().as_secs_f64();
    report.experiment = experiment.name.into();
    report.config.extend(params.resolved());
    report.config.extend(config.echo());
    report.config.remove("output");
    if experiment.seeded && !report.seeds.contains(&config.seed) {
        report.seeds.insert(0, config.seed);
    }
    report.set_summary("budget_used", budget.used() as f64);
    Ok(report)
}

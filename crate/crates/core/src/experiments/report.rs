use std::fs;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::experiments::config::ScenarioConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    #[serde(with = "extended_f64")]
    pub value: f64,
    #[serde(with = "extended_f64")]
    pub threshold: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// JSON has no infinities; they travel as the strings `"inf"`, `"-inf"` and `"nan"`.
mod extended_f64 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(serde::de::Error::custom(format!("not a number: {other}"))),
            },
        }
    }
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), value, threshold, pass: value <= threshold, note: None }
    }

    pub fn at_least(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), value, threshold, pass: value >= threshold, note: None }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    /// A yes/no outcome as value 1 or 0 against threshold 1.
    pub fn flag(name: impl Into<String>, ok: bool) -> Self {
        Self { name: name.into(), value: if ok { 1.0 } else { 0.0 }, threshold: 1.0, pass: ok, note: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub grid: String,
    /// `(stage, seconds)`
    pub stages: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictReport {
    pub scenario: String,
    pub checks: Vec<Check>,
    pub overall: bool,
    pub runtime_seconds: f64,
    pub provenance: Provenance,
}

impl VerdictReport {
    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn failed(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Accumulates checks and stage timings for one scenario run.
pub(crate) struct Recorder {
    scenario: String,
    checks: Vec<Check>,
    stages: Vec<(String, f64)>,
    start: Instant,
    stage_start: Instant,
    config_hash: String,
    grid: String,
}

impl Recorder {
    pub fn new(cfg: &ScenarioConfig) -> Self {
        let now = Instant::now();
        Self {
            scenario: cfg.scenario.name().to_string(),
            checks: Vec::new(),
            stages: Vec::new(),
            start: now,
            stage_start: now,
            config_hash: cfg.hash(),
            grid: format!("{}x{} on [-{w},{w}]^2", cfg.grid.n, cfg.grid.n, w = cfg.grid.half_width),
        }
    }

    pub fn push(&mut self, check: Check) {
        self.checks.push(check);
    }

    /// Closes the current stage.
    pub fn stage(&mut self, name: &str) {
        let now = Instant::now();
        self.stages.push((name.to_string(), (now - self.stage_start).as_secs_f64()));
        self.stage_start = now;
    }

    pub fn has_failures(&self) -> bool {
        self.checks.iter().any(|c| !c.pass)
    }

    pub fn finish(self) -> VerdictReport {
        let overall = !self.checks.is_empty() && self.checks.iter().all(|c| c.pass);
        VerdictReport {
            scenario: self.scenario,
            checks: self.checks,
            overall,
            runtime_seconds: self.start.elapsed().as_secs_f64(),
            provenance: Provenance { config_hash: self.config_hash, grid: self.grid, stages: self.stages },
        }
    }
}

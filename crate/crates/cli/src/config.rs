//! Run files: TOML (or an earlier envelope's JSON echo) plus dotted overrides.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use heatsheet::hitting::{ExperimentConfig, StartLaw};
use heatsheet::invariant::{BridgeMode, ErgodicConfig, Synthesis};
use heatsheet::TargetSet;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunFile {
    /// Worker threads; 0 lets the pool pick.
    #[serde(default)]
    pub workers: usize,
    #[serde(default)]
    pub experiment: ExperimentConfig,
    #[serde(default)]
    pub target: Option<TargetSet<f64>>,
    #[serde(default)]
    pub simulate: SimulateSection,
    #[serde(default)]
    pub hit: HitSection,
    #[serde(default)]
    pub capacity: CapacitySection,
    #[serde(default)]
    pub invariant: InvariantSection,
    #[serde(default)]
    pub recurrence: RecurrenceSection,
    #[serde(default)]
    pub verify: VerifySection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateSection {
    pub paths: usize,
    /// Write each path as `path_<replica>.bin`.
    pub dump: bool,
    pub record_from: f64,
}

impl Default for SimulateSection {
    fn default() -> Self {
        Self {
            paths: 1,
            dump: false,
            record_from: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HitSection {
    /// Also estimate the probability by reweighting driftless paths.
    pub importance: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CapacitySection {
    /// Defaults to `d - 6`.
    pub beta: Option<f64>,
    pub m: usize,
    /// Also report the compact core keeping this fraction of the capacity.
    pub core_fraction: Option<f64>,
}

impl Default for CapacitySection {
    fn default() -> Self {
        Self {
            beta: None,
            m: 2000,
            core_fraction: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InvariantSection {
    pub mode: BridgeMode,
    pub synthesis: Synthesis,
    pub n_x: usize,
    pub n_target: usize,
    /// Sup-norm radii of the reported ball masses.
    pub radii: Vec<f64>,
    pub ergodic: Option<ErgodicConfig>,
}

impl Default for InvariantSection {
    fn default() -> Self {
        Self {
            mode: BridgeMode::Standard,
            synthesis: Synthesis::Nodal,
            n_x: 128,
            n_target: 10_000,
            radii: vec![1.0],
            ergodic: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RecurrenceSection {
    pub start: StartLaw,
    pub stop_on_hit: bool,
}

impl Default for RecurrenceSection {
    fn default() -> Self {
        Self {
            start: StartLaw::Initial,
            stop_on_hit: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySection {
    pub k_max: usize,
    /// 0 skips the Monte Carlo check.
    pub mc_samples: usize,
    pub mc_intervals: usize,
}

impl Default for VerifySection {
    fn default() -> Self {
        Self {
            k_max: 128,
            mc_samples: 1_000_000,
            mc_intervals: 64,
        }
    }
}

/// Parses `text` as TOML, or as JSON when `json` is set. A JSON envelope is
/// unwrapped to its `config` member.
pub fn parse_tree(text: &str, json: bool) -> Result<Value, CliError> {
    if json {
        let mut v: Value = serde_json::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))?;
        if let Some(inner) = v.get_mut("config") {
            return Ok(inner.take());
        }
        Ok(v)
    } else {
        toml::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))
    }
}

/// Parses an override value with TOML value syntax; bare words become strings.
fn parse_value(raw: &str) -> Value {
    #[derive(Deserialize)]
    struct Holder {
        v: Value,
    }
    match toml::from_str::<Holder>(&format!("v = {raw}")) {
        Ok(h) => h.v,
        Err(_) => Value::String(raw.to_string()),
    }
}

/// Applies `key.path=value` to the tree, creating intermediate tables.
pub fn apply_override(tree: &mut Value, spec: &str) -> Result<(), CliError> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override `{spec}`: expected key=value")))?;
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::Config(format!("override `{spec}`: empty path segment")));
    }
    let mut node = tree;
    for (i, part) in parts.iter().enumerate() {
        if !node.is_object() {
            if node.is_null() {
                *node = Value::Object(Map::new());
            } else {
                return Err(CliError::Config(format!(
                    "override `{spec}`: {} is not a table",
                    parts[..i].join(".")
                )));
            }
        }
        let map = node.as_object_mut().expect("object");
        if i + 1 == parts.len() {
            map.insert(part.to_string(), parse_value(raw.trim()));
            return Ok(());
        }
        node = map.entry(part.to_string()).or_insert_with(|| Value::Object(Map::new()));
    }
    unreachable!("the path has at least one segment")
}

/// Deserializes the tree; errors name the offending field path.
pub fn from_tree(tree: Value) -> Result<RunFile, CliError> {
    serde_path_to_error::deserialize(tree).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if path == "." {
            CliError::Config(format!("config: {inner}"))
        } else {
            CliError::Config(format!("{path}: {inner}"))
        }
    })
}

pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<RunFile, CliError> {
    let mut tree = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("config: cannot read {}: {e}", p.display())))?;
            let json = p.extension().is_some_and(|e| e == "json");
            parse_tree(&text, json)?
        }
        None => Value::Object(Map::new()),
    };
    for o in overrides {
        apply_override(&mut tree, o)?;
    }
    let run = from_tree(tree)?;
    run.validate()?;
    Ok(run)
}

impl RunFile {
    /// Range checks beyond what deserialization enforces.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |field: &str, msg: &str| Err(CliError::Config(format!("{field}: {msg}")));
        self.experiment
            .validate()
            .map_err(|e| CliError::Config(format!("experiment.{}", strip_category(&e.to_string()))))?;
        if let Some(t) = &self.target {
            t.validate().map_err(|e| CliError::Config(format!("target: {}", strip_category(&e.to_string()))))?;
            if t.dim() != self.experiment.d {
                return bad("target", "dimension does not match experiment.d");
            }
        }
        if self.simulate.paths == 0 {
            return bad("simulate.paths", "must be at least 1");
        }
        if !(self.simulate.record_from >= 0.0 && self.simulate.record_from <= self.experiment.horizon) {
            return bad("simulate.record_from", "must lie in [0, experiment.horizon]");
        }
        if self.capacity.m == 0 {
            return bad("capacity.m", "must be at least 1");
        }
        if let Some(f) = self.capacity.core_fraction {
            if !(f > 0.0 && f < 1.0) {
                return bad("capacity.core_fraction", "must lie in (0, 1)");
            }
        }
        if self.invariant.n_target == 0 {
            return bad("invariant.n_target", "must be at least 1");
        }
        if self.invariant.n_x == 0 {
            return bad("invariant.n_x", "must be at least 1");
        }
        if self.invariant.radii.iter().any(|r| !(*r > 0.0)) {
            return bad("invariant.radii", "radii must be positive");
        }
        if self.verify.k_max == 0 {
            return bad("verify.k_max", "must be at least 1");
        }
        if self.verify.mc_intervals == 0 {
            return bad("verify.mc_intervals", "must be at least 1");
        }
        Ok(())
    }
}

/// Core messages carry a category prefix ("configuration error: ...").
fn strip_category(msg: &str) -> &str {
    msg.split_once(": ").map_or(msg, |(_, rest)| rest)
}

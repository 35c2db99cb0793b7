// SPDX-License-Identifier: Apache-2.0

//! Run configuration: one JSON document, every key overridable from the
//! command line by its dotted path (`--provider.kind fixture`,
//! `--emulator_samples=3`).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::llm::RemoteConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    /// OpenAI-style chat completions endpoint.
    Remote,
    /// Replay recorded completions; a miss is an error.
    Fixture,
    /// Call the remote endpoint and record every completion.
    Record,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProviderConfig {
    pub kind: ProviderKind,
    pub fixture_dir: PathBuf,
    #[serde(flatten)]
    pub remote: RemoteConfig,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        Self { kind: ProviderKind::Remote, fixture_dir: "fixtures/llm".into(), remote: RemoteConfig::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuntimeKind {
    Python,
    Fixture,
    Record,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RuntimeConfig {
    pub kind: RuntimeKind,
    pub interpreter: PathBuf,
    /// Directory holding `stimulus_tail.py` and `emulator_tail.py`.
    pub tail_dir: PathBuf,
    pub fixture_dir: PathBuf,
    pub stimulus_timeout_s: u64,
    pub candidate_timeout_s: u64,
}

impl Default for RuntimeConfig {
    fn default() -> Self {
        Self {
            kind: RuntimeKind::Python,
            interpreter: "python3".into(),
            tail_dir: "tails".into(),
            fixture_dir: "fixtures/runtime".into(),
            stimulus_timeout_s: 30,
            candidate_timeout_s: 30,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulatorConfig {
    pub binary: PathBuf,
    pub build_timeout_s: u64,
    pub run_timeout_s: u64,
    pub fast_build: bool,
}

impl Default for SimulatorConfig {
    fn default() -> Self {
        Self { binary: "verilator".into(), build_timeout_s: 600, run_timeout_s: 60, fast_build: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub provider: ProviderConfig,
    pub runtime: RuntimeConfig,
    pub simulator: SimulatorConfig,
    pub stimulus_samples: usize,
    pub emulator_samples: usize,
    pub improve_iterations: usize,
    pub temperature: f64,
    pub judge_temperature: f64,
    pub validation_budget: usize,
    pub workers: usize,
    pub eval_workers: usize,
    pub max_scenarios: usize,
    pub max_total_steps: usize,
    pub workspace: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            provider: ProviderConfig::default(),
            runtime: RuntimeConfig::default(),
            simulator: SimulatorConfig::default(),
            stimulus_samples: 3,
            emulator_samples: 5,
            improve_iterations: 3,
            temperature: 0.3,
            judge_temperature: 0.0,
            validation_budget: 2,
            workers: 4,
            eval_workers: 2,
            max_scenarios: 256,
            max_total_steps: 4096,
            workspace: "work".into(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("stimulus_samples", self.stimulus_samples),
            ("emulator_samples", self.emulator_samples),
            ("improve_iterations", self.improve_iterations),
            ("validation_budget", self.validation_budget),
            ("workers", self.workers),
            ("eval_workers", self.eval_workers),
            ("max_scenarios", self.max_scenarios),
            ("max_total_steps", self.max_total_steps),
        ];
        if let Some((k, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("{k} must be >= 1")));
        }
        for (k, t) in [("temperature", self.temperature), ("judge_temperature", self.judge_temperature)] {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(Error::Config(format!("{k} must be a finite number >= 0")));
            }
        }
        Ok(())
    }

    /// Reads `path` (if given), applies `overrides` and validates.
    ///
    /// Fixture and tail directories written in the file are relative to the
    /// file; everything else, and every flag, is relative to the working
    /// directory.
    pub fn load(path: Option<&Path>, overrides: &[(String, String)]) -> Result<Self> {
        let mut doc = serde_json::to_value(RunConfig::default())?;
        if let Some(path) = path {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            let mut user: Value =
                serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            let base = path.parent().unwrap_or(Path::new(""));
            for (section, key) in [("provider", "fixture_dir"), ("runtime", "fixture_dir"), ("runtime", "tail_dir")] {
                if let Some(Value::String(rel)) = user.get_mut(section).and_then(|s| s.get_mut(key)) {
                    if Path::new(rel.as_str()).is_relative() {
                        *rel = base.join(rel.as_str()).to_string_lossy().into_owned();
                    }
                }
            }
            merge(&mut doc, user);
        }
        for (key, raw) in overrides {
            set_dotted(&mut doc, key, raw)?;
        }
        let cfg: RunConfig = serde_json::from_value(doc).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// All dotted keys of the configuration, in document order.
    pub fn keys() -> Vec<String> {
        let mut out = Vec::new();
        collect_keys(&serde_json::to_value(RunConfig::default()).expect("serializable"), "", &mut out);
        out
    }
}

fn collect_keys(v: &Value, prefix: &str, out: &mut Vec<String>) {
    if let Value::Object(map) = v {
        for (k, child) in map {
            let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
            if child.is_object() {
                collect_keys(child, &key, out);
            } else {
                out.push(key);
            }
        }
    }
}

fn merge(base: &mut Value, top: Value) {
    match (base, top) {
        (Value::Object(b), Value::Object(t)) => {
            for (k, v) in t {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Sets `key` to `raw`, read as JSON when it parses and as a string
/// otherwise. Type errors surface when the document is deserialized.
fn set_dotted(doc: &mut Value, key: &str, raw: &str) -> Result<()> {
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = doc;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = node.as_object_mut().ok_or_else(|| Error::Config(format!("unknown config key {key}")))?;
        let child = obj.get_mut(*part).ok_or_else(|| Error::Config(format!("unknown config key {key}")))?;
        if i + 1 == parts.len() {
            if child.is_object() {
                return Err(Error::Config(format!("{key} is a section, not a value")));
            }
            *child = value;
            return Ok(());
        }
        node = child;
    }
    unreachable!("split yields at least one part")
}

/// Removes `--<config key> <value>` and `--<config key>=<value>` pairs from
/// `args` and returns them. Other arguments are left in place.
pub fn split_overrides(args: Vec<String>) -> Result<(Vec<String>, Vec<(String, String)>)> {
    let keys = RunConfig::keys();
    let mut rest = Vec::new();
    let mut overrides = Vec::new();
    let mut it = args.into_iter();
    while let Some(arg) = it.next() {
        let Some(flag) = arg.strip_prefix("--") else {
            rest.push(arg);
            continue;
        };
        let (name, inline) = match flag.split_once('=') {
            Some((n, v)) => (n.to_string(), Some(v.to_string())),
            None => (flag.to_string(), None),
        };
        if !keys.contains(&name) {
            rest.push(arg);
            continue;
        }
        let value = match inline {
            Some(v) => v,
            None => it.next().ok_or_else(|| Error::Config(format!("--{name} needs a value")))?,
        };
        overrides.push((name, value));
    }
    Ok((rest, overrides))
}

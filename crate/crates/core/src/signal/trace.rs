// SPDX-License-Identifier: Apache-2.0

//! Stimulus and trace containers plus trace comparison.

use std::collections::{BTreeMap, BTreeSet};

use super::bitvec::BitVector;
use super::interface::ModuleInterface;
use crate::error::{Error, Result};

/// One evaluated cycle worth of input assignments, keyed by port name.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct StimulusStep {
    pub assignments: BTreeMap<String, BitVector>,
}

impl StimulusStep {
    pub fn new(assignments: BTreeMap<String, BitVector>) -> Self {
        Self { assignments }
    }

    pub fn check(&self, interface: &ModuleInterface) -> Result<()> {
        for (name, value) in &self.assignments {
            let port = interface
                .port(name)
                .ok_or_else(|| Error::Structure(format!("unknown port {name}")))?;
            if !port.is_data_input() {
                return Err(Error::Structure(format!("{name} is not a stimulus input")));
            }
            if port.width != value.width() {
                return Err(Error::Width { expected: port.width, actual: value.width() });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Scenario {
    pub id: String,
    pub steps: Vec<StimulusStep>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StimulusSuite {
    interface: ModuleInterface,
    scenarios: Vec<Scenario>,
}

impl StimulusSuite {
    pub fn new(interface: ModuleInterface, scenarios: Vec<Scenario>) -> Result<Self> {
        let mut ids = BTreeSet::new();
        for sc in &scenarios {
            if sc.id.is_empty() {
                return Err(Error::Structure("empty scenario id".into()));
            }
            if !ids.insert(sc.id.as_str()) {
                return Err(Error::Structure(format!("duplicate scenario id {}", sc.id)));
            }
            if sc.steps.is_empty() {
                return Err(Error::Structure(format!("scenario {} has no steps", sc.id)));
            }
            for step in &sc.steps {
                step.check(&interface)?;
            }
        }
        Ok(Self { interface, scenarios })
    }

    pub fn interface(&self) -> &ModuleInterface {
        &self.interface
    }

    pub fn scenarios(&self) -> &[Scenario] {
        &self.scenarios
    }

    pub fn total_steps(&self) -> usize {
        self.scenarios.iter().map(|s| s.steps.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.scenarios.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TraceStep {
    pub inputs: BTreeMap<String, BitVector>,
    pub outputs: BTreeMap<String, BitVector>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Trace {
    pub scenario_id: String,
    pub steps: Vec<TraceStep>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TraceSet {
    interface: ModuleInterface,
    traces: Vec<Trace>,
}

impl TraceSet {
    pub fn new(interface: ModuleInterface, traces: Vec<Trace>) -> Result<Self> {
        let mut ids = BTreeSet::new();
        let inputs: BTreeMap<&str, usize> = interface.data_inputs().map(|p| (p.name.as_str(), p.width)).collect();
        let outputs: BTreeMap<&str, usize> = interface.outputs().map(|p| (p.name.as_str(), p.width)).collect();
        for t in &traces {
            if !ids.insert(t.scenario_id.as_str()) {
                return Err(Error::Structure(format!("duplicate scenario id {}", t.scenario_id)));
            }
            for (k, step) in t.steps.iter().enumerate() {
                check_cover(&step.inputs, &inputs, &t.scenario_id, k, "inputs")?;
                check_cover(&step.outputs, &outputs, &t.scenario_id, k, "outputs")?;
            }
        }
        Ok(Self { interface, traces })
    }

    pub fn interface(&self) -> &ModuleInterface {
        &self.interface
    }

    pub fn traces(&self) -> &[Trace] {
        &self.traces
    }

    /// Checks that this trace set mirrors `suite`: same scenario ids in the
    /// same order, same step counts, and recorded inputs equal to the stimulus.
    pub fn check_against(&self, suite: &StimulusSuite) -> Result<()> {
        if self.interface != *suite.interface() {
            return Err(Error::Structure("trace interface differs from stimulus interface".into()));
        }
        if self.traces.len() != suite.scenarios().len() {
            return Err(Error::Structure(format!(
                "trace has {} scenarios, stimulus has {}",
                self.traces.len(),
                suite.scenarios().len()
            )));
        }
        for (t, sc) in self.traces.iter().zip(suite.scenarios()) {
            if t.scenario_id != sc.id {
                return Err(Error::Structure(format!("scenario {} where {} was expected", t.scenario_id, sc.id)));
            }
            if t.steps.len() != sc.steps.len() {
                return Err(Error::Structure(format!(
                    "scenario {} has {} trace steps for {} stimulus steps",
                    sc.id,
                    t.steps.len(),
                    sc.steps.len()
                )));
            }
            for (k, (ts, ss)) in t.steps.iter().zip(&sc.steps).enumerate() {
                for (name, v) in &ss.assignments {
                    if ts.inputs.get(name) != Some(v) {
                        return Err(Error::Structure(format!(
                            "scenario {} step {k}: recorded input {name} differs from stimulus",
                            sc.id
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

fn check_cover(
    values: &BTreeMap<String, BitVector>,
    expected: &BTreeMap<&str, usize>,
    scenario: &str,
    step: usize,
    what: &str,
) -> Result<()> {
    if values.len() != expected.len() || values.keys().any(|k| !expected.contains_key(k.as_str())) {
        let got: Vec<&String> = values.keys().collect();
        let want: Vec<&&str> = expected.keys().collect();
        return Err(Error::Structure(format!(
            "scenario {scenario} step {step}: {what} {got:?} do not match ports {want:?}"
        )));
    }
    for (name, v) in values {
        let w = expected[name.as_str()];
        if v.width() != w {
            return Err(Error::Width { expected: w, actual: v.width() });
        }
    }
    Ok(())
}

/// One output value that differs between two traces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceDiff {
    pub scenario_id: String,
    pub step_index: usize,
    pub signal: String,
    pub expected: BitVector,
    pub actual: BitVector,
}

/// Output-by-output comparison. Inputs are not compared.
///
/// Diffs come out in scenario order, then step, then interface port order.
pub fn compare_tracesets(expected: &TraceSet, actual: &TraceSet) -> Result<Vec<TraceDiff>> {
    if expected.interface != actual.interface {
        return Err(Error::Structure("trace sets have different interfaces".into()));
    }
    if expected.traces.len() != actual.traces.len() {
        return Err(Error::Structure(format!(
            "scenario count differs: {} vs {}",
            expected.traces.len(),
            actual.traces.len()
        )));
    }
    let outputs: Vec<&str> = expected.interface.outputs().map(|p| p.name.as_str()).collect();
    let mut diffs = Vec::new();
    for (e, a) in expected.traces.iter().zip(&actual.traces) {
        if e.scenario_id != a.scenario_id {
            return Err(Error::Structure(format!("scenario id {} vs {}", e.scenario_id, a.scenario_id)));
        }
        if e.steps.len() != a.steps.len() {
            return Err(Error::Structure(format!(
                "scenario {}: {} steps vs {}",
                e.scenario_id,
                e.steps.len(),
                a.steps.len()
            )));
        }
        for (k, (es, as_)) in e.steps.iter().zip(&a.steps).enumerate() {
            for name in &outputs {
                let ev = &es.outputs[*name];
                let av = &as_.outputs[*name];
                if ev != av {
                    diffs.push(TraceDiff {
                        scenario_id: e.scenario_id.clone(),
                        step_index: k,
                        signal: name.to_string(),
                        expected: ev.clone(),
                        actual: av.clone(),
                    });
                }
            }
        }
    }
    Ok(diffs)
}

/// True when both trace sets have the same structure and identical outputs.
pub fn traces_equal(a: &TraceSet, b: &TraceSet) -> bool {
    matches!(compare_tracesets(a, b), Ok(d) if d.is_empty())
}

// SPDX-License-Identifier: Apache-2.0

//! JSON wire formats for `Input_signal.json` and `Reference_signal.json`.
//!
//! Values travel as unprefixed MSB-first binary strings of exact port width.
//! Keys are emitted sorted so files diff cleanly.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::bitvec::{format_bitvector, parse_bitvector, BitVector};
use super::interface::ModuleInterface;
use super::trace::{Scenario, StimulusStep, StimulusSuite, Trace, TraceSet, TraceStep};
use crate::error::{Error, Result};

pub type RawStep = BTreeMap<String, String>;

/// One element of `Input_signal.json`, before width validation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawScenario {
    pub scenario: String,
    pub steps: Vec<RawStep>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawTraceStep {
    pub inputs: RawStep,
    pub outputs: RawStep,
}

/// One element of `Reference_signal.json`, before width validation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawTrace {
    pub scenario: String,
    pub steps: Vec<RawTraceStep>,
}

fn encode(values: &BTreeMap<String, BitVector>) -> RawStep {
    values.iter().map(|(k, v)| (k.clone(), format_bitvector(v))).collect()
}

fn decode(raw: &RawStep, interface: &ModuleInterface) -> Result<BTreeMap<String, BitVector>> {
    raw.iter()
        .map(|(name, text)| {
            let port = interface
                .port(name)
                .ok_or_else(|| Error::Structure(format!("unknown port {name}")))?;
            Ok((name.clone(), parse_bitvector(text, port.width)?))
        })
        .collect()
}

impl Scenario {
    pub fn to_raw(&self) -> RawScenario {
        RawScenario {
            scenario: self.id.clone(),
            steps: self.steps.iter().map(|s| encode(&s.assignments)).collect(),
        }
    }

    pub fn from_raw(raw: &RawScenario, interface: &ModuleInterface) -> Result<Self> {
        let steps = raw
            .steps
            .iter()
            .map(|s| {
                let step = StimulusStep::new(decode(s, interface)?);
                step.check(interface)?;
                Ok(step)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Scenario { id: raw.scenario.clone(), steps })
    }
}

impl Trace {
    pub fn to_raw(&self) -> RawTrace {
        RawTrace {
            scenario: self.scenario_id.clone(),
            steps: self
                .steps
                .iter()
                .map(|s| RawTraceStep { inputs: encode(&s.inputs), outputs: encode(&s.outputs) })
                .collect(),
        }
    }

    pub fn from_raw(raw: &RawTrace, interface: &ModuleInterface) -> Result<Self> {
        let steps = raw
            .steps
            .iter()
            .map(|s| Ok(TraceStep { inputs: decode(&s.inputs, interface)?, outputs: decode(&s.outputs, interface)? }))
            .collect::<Result<Vec<_>>>()?;
        Ok(Trace { scenario_id: raw.scenario.clone(), steps })
    }
}

pub fn stimulus_to_json(suite: &StimulusSuite) -> String {
    let raw: Vec<RawScenario> = suite.scenarios().iter().map(Scenario::to_raw).collect();
    to_pretty(&raw)
}

pub fn stimulus_from_json(text: &str, interface: &ModuleInterface) -> Result<StimulusSuite> {
    let raw: Vec<RawScenario> = serde_json::from_str(text)?;
    let scenarios = raw
        .iter()
        .map(|r| Scenario::from_raw(r, interface))
        .collect::<Result<Vec<_>>>()?;
    StimulusSuite::new(interface.clone(), scenarios)
}

pub fn traceset_to_json(traces: &TraceSet) -> String {
    let raw: Vec<RawTrace> = traces.traces().iter().map(Trace::to_raw).collect();
    to_pretty(&raw)
}

pub fn traceset_from_json(text: &str, interface: &ModuleInterface) -> Result<TraceSet> {
    let raw: Vec<RawTrace> = serde_json::from_str(text)?;
    traceset_from_raw(&raw, interface)
}

pub fn traceset_from_raw(raw: &[RawTrace], interface: &ModuleInterface) -> Result<TraceSet> {
    let traces = raw
        .iter()
        .map(|r| Trace::from_raw(r, interface))
        .collect::<Result<Vec<_>>>()?;
    TraceSet::new(interface.clone(), traces)
}

pub(crate) fn to_pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("wire types always serialize");
    s.push('\n');
    s
}

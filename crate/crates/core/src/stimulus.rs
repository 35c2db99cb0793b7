// SPDX-License-Identifier: Apache-2.0

//! Stimulus agent: scenario planning, K-way stimulus script sampling, and
//! merging of the scripts' executed output into one [`StimulusSuite`].

use std::collections::{BTreeMap, HashSet};

use crate::error::{Error, Result};
use crate::llm::{extract_code_block, Gateway, SamplingParams, Stage};
use crate::problem::Problem;
use crate::prompts;
use crate::runtime::Backend;
use crate::signal::{
    parse_bitvector, BitVector, ModuleInterface, RawScenario, Scenario, StimulusStep, StimulusSuite,
};
use crate::util::parallel_map;
use crate::workspace::ProblemWorkspace;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioPlan {
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StimulusScript {
    pub source: String,
    pub sample_index: usize,
}

/// Upper bounds on the merged suite.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SuiteLimits {
    pub max_scenarios: usize,
    pub max_total_steps: usize,
}

impl Default for SuiteLimits {
    fn default() -> Self {
        Self { max_scenarios: 256, max_total_steps: 4096 }
    }
}

pub fn design_scenarios(
    problem: &Problem,
    gateway: &Gateway,
    temperature: f64,
    ws: Option<&ProblemWorkspace>,
) -> Result<ScenarioPlan> {
    problem.validate()?;
    let prompt = prompts::scenario_prompt(problem);
    let completion = gateway
        .complete(&prompt, &SamplingParams::new(temperature, 1), Stage::Stimulus)?
        .remove(0);
    let text = completion.text.trim().to_string();
    if text.is_empty() {
        return Err(Error::StimulusGen("scenario plan came back empty".into()));
    }
    if let Some(ws) = ws {
        ws.write(&ws.testcase_desc(), format!("{text}\n"))?;
    }
    log::info!(target: "stimulus", "scenario plan for {}: {} lines", problem.id, text.lines().count());
    Ok(ScenarioPlan { text })
}

pub fn generate_stimulus_scripts(
    problem: &Problem,
    plan: &ScenarioPlan,
    k: usize,
    temperature: f64,
    gateway: &Gateway,
    ws: Option<&ProblemWorkspace>,
) -> Result<Vec<StimulusScript>> {
    if k == 0 {
        return Err(Error::Invalid("stimulus sample count must be >= 1".into()));
    }
    let prompt = prompts::stimulus_prompt(problem, &plan.text);
    let completions = gateway.complete(&prompt, &SamplingParams::new(temperature, k), Stage::Stimulus)?;
    let mut scripts = Vec::new();
    for (i, c) in completions.iter().enumerate() {
        match extract_code_block(&c.text, "python") {
            Ok(source) if !source.trim().is_empty() => {
                if let Some(ws) = ws {
                    ws.write(&ws.stimulus_script(i), format!("{source}\n"))?;
                }
                scripts.push(StimulusScript { source, sample_index: i });
            }
            _ => log::warn!(target: "stimulus", "sample {i}: no usable code block, dropped"),
        }
    }
    if scripts.is_empty() {
        return Err(Error::StimulusGen(format!("none of the {k} stimulus samples contained code")));
    }
    Ok(scripts)
}

/// Runs every script, validates its scenarios against `interface`, and merges
/// them in sample order.
///
/// Scenario ids become `s<sample>_<local id>`. Inputs a step leaves out keep
/// their previous value (zero on the first step). Scenarios with identical
/// step lists are kept once.
pub fn collect_stimuli(
    scripts: &[StimulusScript],
    interface: &ModuleInterface,
    backend: &dyn Backend,
    workers: usize,
    limits: SuiteLimits,
) -> Result<StimulusSuite> {
    if scripts.is_empty() {
        return Err(Error::StimulusGen("no stimulus scripts to run".into()));
    }
    let outputs = parallel_map(scripts, workers, |_, s| backend.run_stimulus(&s.source));

    let mut scenarios: Vec<Scenario> = Vec::new();
    let mut seen_steps: HashSet<Vec<StimulusStep>> = HashSet::new();
    let mut total_steps = 0usize;
    let mut truncated = false;

    'scripts: for (script, output) in scripts.iter().zip(outputs) {
        let raw = match output? {
            Ok(raw) => raw,
            Err(f) => {
                log::warn!(target: "stimulus", "script {} failed ({f}); output discarded", script.sample_index);
                continue;
            }
        };
        let mut local_ids: HashSet<String> = HashSet::new();
        for (pos, rs) in raw.iter().enumerate() {
            let steps = match normalize_steps(rs, interface) {
                Ok(steps) => steps,
                Err(note) => {
                    log::warn!(
                        target: "stimulus",
                        "script {} scenario {:?} dropped: {note}",
                        script.sample_index,
                        rs.scenario
                    );
                    continue;
                }
            };
            if seen_steps.contains(&steps) {
                continue;
            }
            if scenarios.len() >= limits.max_scenarios || total_steps >= limits.max_total_steps {
                truncated = true;
                break 'scripts;
            }
            let mut steps = steps;
            let budget = limits.max_total_steps - total_steps;
            if steps.len() > budget {
                steps.truncate(budget);
                truncated = true;
            }
            let mut local = sanitize_id(&rs.scenario, pos);
            if !local_ids.insert(local.clone()) {
                let mut n = 1;
                while !local_ids.insert(format!("{local}_{n}")) {
                    n += 1;
                }
                local = format!("{local}_{n}");
            }
            total_steps += steps.len();
            seen_steps.insert(steps.clone());
            scenarios.push(Scenario { id: format!("s{}_{local}", script.sample_index), steps });
        }
    }
    if truncated {
        log::warn!(
            target: "stimulus",
            "suite truncated to {} scenarios / {} steps",
            scenarios.len(),
            total_steps
        );
    }
    if scenarios.is_empty() {
        return Err(Error::StimulusGen("no valid scenarios were produced".into()));
    }
    StimulusSuite::new(interface.clone(), scenarios)
}

fn normalize_steps(raw: &RawScenario, interface: &ModuleInterface) -> std::result::Result<Vec<StimulusStep>, String> {
    if raw.steps.is_empty() {
        return Err("scenario has no steps".into());
    }
    let mut current: BTreeMap<String, BitVector> = interface
        .data_inputs()
        .map(|p| (p.name.clone(), BitVector::zero(p.width).expect("ports have positive width")))
        .collect();
    let mut steps = Vec::with_capacity(raw.steps.len());
    for (k, step) in raw.steps.iter().enumerate() {
        for (name, text) in step {
            let port = interface.port(name).ok_or_else(|| format!("step {k}: unknown port {name}"))?;
            if !port.is_data_input() {
                return Err(format!("step {k}: {name} is not a drivable input"));
            }
            let v = parse_bitvector(text, port.width).map_err(|e| format!("step {k}: {name}: {e}"))?;
            current.insert(name.clone(), v);
        }
        steps.push(StimulusStep::new(current.clone()));
    }
    Ok(steps)
}

fn sanitize_id(raw: &str, position: usize) -> String {
    let cleaned: String = raw
        .trim()
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.') { c } else { '_' })
        .collect();
    if cleaned.is_empty() {
        position.to_string()
    } else {
        cleaned
    }
}

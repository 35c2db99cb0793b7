// SPDX-License-Identifier: Apache-2.0

//! Prompt templates and few-shot catalog for every agent in the pipeline.
//!
//! The system strings double as stable identifiers: scripted providers in
//! tests and examples dispatch on them.

use std::fmt::Write as _;

use crate::llm::PromptBundle;
use crate::problem::Problem;
use crate::signal::{format_bitvector, ModuleInterface, TraceSet};

pub const SCENARIO_SYSTEM: &str = "You are a hardware verification engineer. You design test scenarios for RTL modules from their natural-language specification.";
pub const STIMULUS_SYSTEM: &str = "You are a hardware verification engineer. You write Python programs that generate input stimulus for RTL modules.";
pub const EMULATOR_SYSTEM: &str = "You are a hardware modelling engineer. You write cycle-level Python functional models of RTL modules.";
pub const JUDGE_SYSTEM: &str = "You are a strict reviewer of hardware functional models. You compare candidate models and their simulated waveforms against a specification.";
pub const REFINE_SYSTEM: &str = "You are a hardware modelling engineer. You repair Python functional models of RTL modules using reviewer feedback.";
pub const ROOT_CAUSE_SYSTEM: &str = "You are a hardware verification lead. You decide whether a simulation mismatch is caused by the design under test or by the reference model.";

/// Steps shown per scenario when waveforms are rendered into a prompt.
pub const WAVEFORM_STEP_LIMIT: usize = 32;

const WIDTH_GUIDANCE: &str = "\
Signal values are binary strings written most-significant bit first, with exactly as many characters as the port is wide. \
Character 0 of the string is the highest-numbered bit of the Verilog range: for a port declared [4:1], the string \"1000\" sets bit 4 and clears bits 3, 2 and 1. \
Never index a value string as if position 0 were bit 0; convert with int(s, 2) and format back with format(v & mask, '0{w}b').";

const STIMULUS_CONTRACT: &str = "\
Define a function `generate_scenarios()` that returns a list of scenarios. Each scenario is a dict \
{\"id\": <short identifier without spaces>, \"steps\": [<step>, ...]} and each step maps input port names to binary strings of the exact port width. \
Do not drive the clock: one step is one clock cycle and the harness toggles the clock. \
You may use the `random` module; it is seeded before your code runs.";

const EMULATOR_CONTRACT: &str = "\
Define a class `Python_DUT` with a constructor taking no arguments that initializes all internal state, and a method `load(self, inputs)` \
that receives one step's input dict (port name -> binary string) and returns a dict mapping every output port to a binary string of the exact width. \
A fresh instance is created for every scenario and `load` is called once per step, in order. \
For sequential modules one `load` call is one rising clock edge: apply the inputs, update registers, then return the outputs visible after the edge.";

pub fn port_table(interface: &ModuleInterface) -> String {
    let mut out = String::from("| port | direction | width | role |\n|---|---|---|---|\n");
    for p in interface.ports() {
        let role = if p.is_clock {
            "clock"
        } else if p.is_reset {
            "reset"
        } else {
            "data"
        };
        let dir = match p.direction {
            crate::signal::Direction::Input => "input",
            crate::signal::Direction::Output => "output",
        };
        let _ = writeln!(out, "| {} | {} | {} | {} |", p.name, dir, p.width, role);
    }
    out
}

fn problem_header(problem: &Problem) -> String {
    format!(
        "## Specification\n{}\n\n## Module interface (module `{}`, {} circuit)\n{}\n",
        problem.spec_text.trim(),
        problem.interface.module_name(),
        problem.circuit_type,
        port_table(&problem.interface)
    )
}

pub fn scenario_prompt(problem: &Problem) -> PromptBundle {
    let user = format!(
        "{}\n## Task\nAnalyse the specification in terms of logic, functionality, edge cases and signal conditions. \
Write a numbered list of test scenarios. Give each scenario a short identifier without spaces on its own line as `id: <identifier>`, \
followed by what it exercises and the input sequence it needs.",
        problem_header(problem)
    );
    PromptBundle::new(SCENARIO_SYSTEM, user).with_few_shots(few_shot(SCENARIO_SHOT))
}

pub fn stimulus_prompt(problem: &Problem, plan: &str) -> PromptBundle {
    let user = format!(
        "{}\n## Value encoding\n{WIDTH_GUIDANCE}\n\n## Test plan\n{}\n\n## Task\n{STIMULUS_CONTRACT}\nCover every scenario in the plan. Reply with one ```python block.",
        problem_header(problem),
        plan.trim()
    );
    PromptBundle::new(STIMULUS_SYSTEM, user).with_few_shots(few_shot(STIMULUS_SHOT))
}

pub fn emulator_prompt(problem: &Problem) -> PromptBundle {
    let user = format!(
        "{}\n## Value encoding\n{WIDTH_GUIDANCE}\n\n## Task\n{EMULATOR_CONTRACT}\nReply with one ```python block.",
        problem_header(problem)
    );
    PromptBundle::new(EMULATOR_SYSTEM, user).with_few_shots(few_shot(EMULATOR_SHOT))
}

/// Everything the judge sees; the refiner receives the same material.
#[derive(Debug, Clone)]
pub struct JudgeMaterial<'a> {
    pub problem: &'a Problem,
    /// (candidate index, source, execution error if it failed)
    pub candidates: Vec<(usize, &'a str, Option<String>)>,
    pub consensus: String,
    /// (candidate indices that produced it, waveform)
    pub evidence: Vec<(Vec<usize>, &'a TraceSet)>,
}

fn judge_body(m: &JudgeMaterial<'_>) -> String {
    let mut out = problem_header(m.problem);
    out.push_str("\n## Value encoding\n");
    out.push_str(WIDTH_GUIDANCE);
    out.push_str("\n\n## Candidate functional models\n");
    for (idx, src, err) in &m.candidates {
        match err {
            None => {
                let _ = write!(out, "### Candidate {idx}\n```python\n{}\n```\n", src.trim_end());
            }
            Some(e) => {
                let _ = write!(
                    out,
                    "### Candidate {idx} (execution failed: {})\n```python\n{}\n```\n",
                    e.lines().next().unwrap_or(""),
                    src.trim_end()
                );
            }
        }
    }
    let _ = write!(out, "\n## Consensus\n{}\n\n## Simulated waveforms\n", m.consensus);
    for (group, (members, traces)) in m.evidence.iter().enumerate() {
        let names: Vec<String> = members.iter().map(|i| i.to_string()).collect();
        let _ = write!(out, "### Waveform {} (candidates {})\n", group_label(group), names.join(", "));
        out.push_str(&render_waveforms(traces, WAVEFORM_STEP_LIMIT));
        out.push('\n');
    }
    out
}

fn group_label(i: usize) -> String {
    let letter = (b'A' + (i % 26) as u8) as char;
    if i < 26 {
        letter.to_string()
    } else {
        format!("{letter}{}", i / 26)
    }
}

pub fn judge_prompt(m: &JudgeMaterial<'_>) -> PromptBundle {
    let user = format!(
        "{}## Task\nDecide which live candidate implements the specification best and whether its waveform fully matches the specification. \
Explain every misalignment you find (signal, scenario, step, expected behaviour). \
Reply with exactly one ```json block of the form {{\"best\": <candidate index>, \"aligned\": <true|false>, \"analysis\": \"<text>\"}}.",
        judge_body(m)
    );
    PromptBundle::new(JUDGE_SYSTEM, user)
}

pub fn refine_prompt(m: &JudgeMaterial<'_>, selected_index: usize, selected_source: &str, analysis: &str) -> PromptBundle {
    let user = format!(
        "{}## Reviewer analysis\n{}\n\n## Selected candidate {selected_index}\n```python\n{}\n```\n\n## Task\n\
Rewrite the selected candidate so that every issue in the analysis is fixed while keeping the runtime contract:\n{EMULATOR_CONTRACT}\nReply with one ```python block.",
        judge_body(m),
        analysis.trim(),
        selected_source.trim_end()
    );
    PromptBundle::new(REFINE_SYSTEM, user).with_few_shots(few_shot(EMULATOR_SHOT))
}

pub fn root_cause_prompt(problem: &Problem, dut_source: &str, model_source: &str, narrative: &str) -> PromptBundle {
    let user = format!(
        "{}\n## Design under test (Verilog)\n```verilog\n{}\n```\n\n## Reference model (Python)\n```python\n{}\n```\n\n## Simulation report\n{}\n\n## Task\n\
Determine whether the mismatches come from a functional error in the design under test or from an error in the reference model. \
Reply with exactly one ```json block of the form {{\"cause\": \"DUT\" | \"MODEL\", \"rationale\": \"<text>\"}}.",
        problem_header(problem),
        dut_source.trim_end(),
        model_source.trim_end(),
        narrative.trim_end()
    );
    PromptBundle::new(ROOT_CAUSE_SYSTEM, user)
}

/// Follow-up prompt after an unusable reply. The note makes the prompt (and
/// so its fixture key) differ from the first attempt.
pub fn reask(original: &PromptBundle, problem_with_reply: &str) -> PromptBundle {
    let mut p = original.clone();
    let _ = write!(
        p.user,
        "\n\n## Correction\nYour previous reply could not be used: {problem_with_reply}. Answer again following the required format exactly."
    );
    p
}

/// Per scenario, a step-indexed table of input and output binary strings.
pub fn render_waveforms(traces: &TraceSet, max_steps: usize) -> String {
    let iface = traces.interface();
    let inputs: Vec<&str> = iface.data_inputs().map(|p| p.name.as_str()).collect();
    let outputs: Vec<&str> = iface.outputs().map(|p| p.name.as_str()).collect();
    let mut out = String::new();
    for t in traces.traces() {
        let _ = writeln!(out, "scenario {} ({} steps)", t.scenario_id, t.steps.len());
        let mut header = vec!["step".to_string()];
        header.extend(inputs.iter().map(|s| s.to_string()));
        header.push("||".into());
        header.extend(outputs.iter().map(|s| s.to_string()));
        let _ = writeln!(out, "{}", header.join(" | "));
        for (k, step) in t.steps.iter().take(max_steps).enumerate() {
            let mut row = vec![k.to_string()];
            row.extend(inputs.iter().map(|n| format_bitvector(&step.inputs[*n])));
            row.push("||".into());
            row.extend(outputs.iter().map(|n| format_bitvector(&step.outputs[*n])));
            let _ = writeln!(out, "{}", row.join(" | "));
        }
        if t.steps.len() > max_steps {
            let _ = writeln!(out, "... ({} more steps elided)", t.steps.len() - max_steps);
        }
    }
    out
}

fn few_shot(shot: (&str, &str)) -> Vec<(String, String)> {
    vec![(shot.0.to_string(), shot.1.to_string())]
}

const SCENARIO_SHOT: (&str, &str) = (
    "## Specification\nA 2-to-1 multiplexer: y = sel ? b : a, all signals 1 bit.\n\n## Module interface (module `top_module`, CMB circuit)\n| port | direction | width | role |\n|---|---|---|---|\n| a | input | 1 | data |\n| b | input | 1 | data |\n| sel | input | 1 | data |\n| y | output | 1 | data |\n\n## Task\nWrite a numbered list of test scenarios.",
    "1. id: select_a\n   sel=0 while a and b take all four combinations; y must follow a.\n2. id: select_b\n   sel=1 while a and b take all four combinations; y must follow b.\n3. id: toggle_sel\n   a=0, b=1 with sel alternating every step; y must alternate with sel.",
);

const STIMULUS_SHOT: (&str, &str) = (
    "## Module interface (module `top_module`, SEQ circuit)\n| port | direction | width | role |\n|---|---|---|---|\n| clk | input | 1 | clock |\n| reset | input | 1 | reset |\n| d | input | 8 | data |\n| q | output | 8 | data |\n\n## Test plan\n1. id: reset_then_load\n2. id: random_data",
    "```python\nimport random\n\ndef generate_scenarios():\n    scenarios = []\n    steps = [{\"reset\": \"1\", \"d\": \"00000000\"}]\n    steps += [{\"reset\": \"0\", \"d\": format(v, \"08b\")} for v in (0x00, 0xFF, 0xA5, 0x5A)]\n    scenarios.append({\"id\": \"reset_then_load\", \"steps\": steps})\n    steps = [{\"reset\": \"0\", \"d\": format(random.getrandbits(8), \"08b\")} for _ in range(16)]\n    scenarios.append({\"id\": \"random_data\", \"steps\": steps})\n    return scenarios\n```",
);

const EMULATOR_SHOT: (&str, &str) = (
    "## Specification\nAn 8-bit register with synchronous active-high reset: on each rising clock edge q becomes 0 if reset is 1, otherwise d.\n\n## Module interface (module `top_module`, SEQ circuit)\n| port | direction | width | role |\n|---|---|---|---|\n| clk | input | 1 | clock |\n| reset | input | 1 | reset |\n| d | input | 8 | data |\n| q | output | 8 | data |",
    "```python\nclass Python_DUT:\n    def __init__(self):\n        self.q = 0\n\n    def load(self, inputs):\n        reset = int(inputs[\"reset\"], 2)\n        d = int(inputs[\"d\"], 2)\n        self.q = 0 if reset else d & 0xFF\n        return {\"q\": format(self.q, \"08b\")}\n```",
);

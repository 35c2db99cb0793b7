// SPDX-License-Identifier: Apache-2.0

// Scripted stand-ins for the language model and the Python runtime over the
// micro-corpus. They answer every prompt the pipeline sends for `adder2` and
// `counter4` with fixed, plausible completions, and "execute" the scripts
// they handed out with Rust code of the same meaning. Recording through
// them produces the committed fixtures under tests/data/fixtures.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use tbgen::codegen::{emit_testbench, CodegenOptions};
use tbgen::config::RunConfig;
use tbgen::llm::{Completion, PromptBundle, RecordingProvider, ScriptedProvider};
use tbgen::pipeline::{gen_tb, verify, Services};
use tbgen::prompts::{EMULATOR_SYSTEM, JUDGE_SYSTEM, REFINE_SYSTEM, ROOT_CAUSE_SYSTEM, SCENARIO_SYSTEM, STIMULUS_SYSTEM};
use tbgen::runtime::{Execution, ExecutionFailure, FailureKind, FnBackend, RecordingBackend};
use tbgen::signal::{RawScenario, RawTrace, RawTraceStep, StimulusSuite, TraceSet};
use tbgen::validate::{FinalVerdict, VerilatorSimulator};
use tbgen::workspace::Workspace;
use tbgen::{Error, Problem};

pub fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data")
}

pub fn corpus_dir() -> PathBuf {
    data_dir().join("corpus")
}

pub fn micro_config_path() -> PathBuf {
    data_dir().join("micro_config.json")
}

pub fn micro_config() -> RunConfig {
    RunConfig::load(Some(&micro_config_path()), &[]).unwrap()
}

pub const PROBLEMS: [&str; 2] = ["adder2", "counter4"];

/// The mutant each problem's recorded verify run is exercised on.
pub fn designated_mutant(pid: &str) -> &'static str {
    match pid {
        "adder2" => "carry_dropped",
        _ => "reset_ignored",
    }
}

pub fn verilator() -> Option<VerilatorSimulator> {
    match VerilatorSimulator::probe("verilator") {
        Ok(v) => Some(v),
        Err(e) => {
            eprintln!("verilator unavailable: {e}");
            None
        }
    }
}

// ---------------------------------------------------------------- scripts

const ADDER_PLAN: &str = "1. exhaustive: apply every combination of a and b, checking the carry into s[2]\n\
2. corners: the extreme operand pairs 0+0, 3+3, 3+1 and 2+2";

const COUNTER_PLAN: &str = "1. reset_then_count: hold reset for one cycle, then count for 20 cycles through the wrap from 15 to 0\n\
2. mid_reset: assert reset again in the middle of counting and check that q restarts from 0";

const ADDER_EXHAUSTIVE: &str = "# stimulus: adder2/exhaustive
def generate_scenarios():
    steps = []
    for a in range(4):
        for b in range(4):
            steps.append({\"a\": format(a, \"02b\"), \"b\": format(b, \"02b\")})
    return [{\"id\": \"exhaustive\", \"steps\": steps}]";

const ADDER_CORNERS: &str = "# stimulus: adder2/corners
def generate_scenarios():
    corners = [(0, 0), (3, 3), (3, 1), (2, 2)]
    steps = [{\"a\": format(a, \"02b\"), \"b\": format(b, \"02b\")} for a, b in corners]
    return [{\"id\": \"corners\", \"steps\": steps}]";

const COUNTER_COUNT: &str = "# stimulus: counter4/reset_then_count
def generate_scenarios():
    steps = [{\"reset\": \"1\"}] + [{\"reset\": \"0\"} for _ in range(20)]
    return [{\"id\": \"reset_then_count\", \"steps\": steps}]";

const COUNTER_MID_RESET: &str = "# stimulus: counter4/mid_reset
def generate_scenarios():
    pattern = \"100000100\"
    return [{\"id\": \"mid_reset\", \"steps\": [{\"reset\": r} for r in pattern]}]";

fn adder_model(tag: &str, mask: &str) -> String {
    format!(
        "# model: {tag}
class Python_DUT:
    def __init__(self):
        pass

    def load(self, inputs):
        a = int(inputs[\"a\"], 2)
        b = int(inputs[\"b\"], 2)
        return {{\"s\": format((a + b) & {mask}, \"03b\")}}"
    )
}

fn counter_model(tag: &str, step: &str) -> String {
    format!(
        "# model: {tag}
class Python_DUT:
    def __init__(self):
        self.q = 0

    def load(self, inputs):
        if inputs[\"reset\"] == \"1\":
            self.q = 0
        else:
            {step}
        return {{\"q\": format(self.q, \"04b\")}}"
    )
}

const COUNTER_CRASH: &str = "# model: counter_crash
class Python_DUT:
    def __init__(self):
        self.q = 0

    def load(self, inputs):
        if inputs[\"rst\"] == \"1\":
            self.q = 0
        else:
            self.q = (self.q + 1) % 16
        return {\"q\": format(self.q, \"04b\")}";

fn fenced(lang: &str, body: &str) -> String {
    format!("```{lang}\n{body}\n```")
}

fn completion(prompt: &PromptBundle, text: String) -> Completion {
    let p = (prompt.system.len() + prompt.user.len() + prompt.few_shots.iter().map(|(u, a)| u.len() + a.len()).sum::<usize>()) as u64;
    let c = text.len() as u64;
    Completion::new(text, p.div_ceil(4), c.div_ceil(4))
}

fn golden_source(pid: &str) -> String {
    std::fs::read_to_string(corpus_dir().join(pid).join("top.v")).unwrap()
}

fn which(prompt: &PromptBundle) -> &'static str {
    if prompt.user.contains("2-bit unsigned adder") {
        "adder2"
    } else if prompt.user.contains("4-bit binary counter") {
        "counter4"
    } else {
        "unknown"
    }
}

fn reply(prompt: &PromptBundle, idx: usize) -> tbgen::Result<Completion> {
    let pid = which(prompt);
    let text = match (prompt.system.as_str(), pid) {
        (s, "adder2") if s == SCENARIO_SYSTEM => ADDER_PLAN.to_string(),
        (s, "counter4") if s == SCENARIO_SYSTEM => COUNTER_PLAN.to_string(),
        (s, "adder2") if s == STIMULUS_SYSTEM => {
            format!("Here is the generator.\n\n{}", fenced("python", [ADDER_EXHAUSTIVE, ADDER_CORNERS][idx % 2]))
        }
        (s, "counter4") if s == STIMULUS_SYSTEM => {
            format!("Here is the generator.\n\n{}", fenced("python", [COUNTER_COUNT, COUNTER_MID_RESET][idx % 2]))
        }
        (s, "adder2") if s == EMULATOR_SYSTEM => match idx {
            2 => fenced("python", &adder_model("adder_nocarry (sample 2)", "0b011")),
            3 => "The adder simply adds a and b; the sum has three bits.".to_string(),
            i => fenced("python", &adder_model(&format!("adder_ok (sample {i})"), "0b111")),
        },
        (s, "counter4") if s == EMULATOR_SYSTEM => match idx {
            4 => fenced("python", COUNTER_CRASH),
            i => fenced(
                "python",
                &counter_model(&format!("counter_saturating (sample {i})"), "self.q = min(self.q + 1, 15)"),
            ),
        },
        (s, "adder2") if s == JUDGE_SYSTEM => fenced(
            "json",
            r#"{"best": 0, "aligned": true, "analysis": "Candidate 2 drops the carry into s[2]; the others match the specification."}"#,
        ),
        (s, "counter4") if s == JUDGE_SYSTEM => fenced(
            "json",
            r#"{"best": 0, "aligned": true, "analysis": "The live candidates reset to 0 and count up on every edge as specified."}"#,
        ),
        (s, "counter4") if s == REFINE_SYSTEM => {
            fenced("python", &counter_model("counter_ok (refined)", "self.q = (self.q + 1) % 16"))
        }
        (s, pid) if s == ROOT_CAUSE_SYSTEM => {
            let golden = golden_source(pid);
            if prompt.user.contains(golden.trim_end()) && prompt.user.contains("counter_saturating") {
                fenced(
                    "json",
                    r#"{"cause": "MODEL", "rationale": "The specification says q wraps from 15 back to 0, but the reference model saturates at 15."}"#,
                )
            } else {
                fenced(
                    "json",
                    r#"{"cause": "DUT", "rationale": "The reference model follows the specification on every failing step; the design does not."}"#,
                )
            }
        }
        _ => return Err(Error::Provider(format!("unscripted prompt ({pid})"))),
    };
    Ok(completion(prompt, text))
}

pub fn scripted_provider() -> ScriptedProvider {
    ScriptedProvider::new(reply)
}

fn bin(v: u32, w: usize) -> String {
    format!("{v:0w$b}")
}

fn step(pairs: &[(&str, String)]) -> BTreeMap<String, String> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

/// Oracle stimulus for a script marker.
pub fn run_stimulus(script: &str) -> Execution<Vec<RawScenario>> {
    let marker = script.lines().next().unwrap_or("");
    let scenario = |id: &str, steps: Vec<BTreeMap<String, String>>| vec![RawScenario { scenario: id.into(), steps }];
    let adder = |pairs: Vec<(u32, u32)>| pairs.into_iter().map(|(a, b)| step(&[("a", bin(a, 2)), ("b", bin(b, 2))])).collect();
    let resets = |p: &str| p.chars().map(|c| step(&[("reset", c.to_string())])).collect();
    Ok(match marker {
        "# stimulus: adder2/exhaustive" => scenario("exhaustive", adder((0..4).flat_map(|a| (0..4).map(move |b| (a, b))).collect())),
        "# stimulus: adder2/corners" => scenario("corners", adder(vec![(0, 0), (3, 3), (3, 1), (2, 2)])),
        "# stimulus: counter4/reset_then_count" => scenario("reset_then_count", resets(&format!("1{}", "0".repeat(20)))),
        "# stimulus: counter4/mid_reset" => scenario("mid_reset", resets("100000100")),
        other => return Err(ExecutionFailure::new(FailureKind::MissingEntryPoint, format!("unknown script {other}"))),
    })
}

/// Oracle functional model: `kind` is adder_ok, adder_nocarry, counter_ok,
/// counter_saturating.
pub fn model_outputs(kind: &str, suite: &StimulusSuite) -> Vec<RawTrace> {
    suite
        .scenarios()
        .iter()
        .map(|sc| {
            let mut q = 0u32;
            let steps = sc
                .steps
                .iter()
                .map(|st| {
                    let get = |n: &str| st.assignments[n].to_u64().unwrap() as u32;
                    let inputs: BTreeMap<String, String> =
                        st.assignments.iter().map(|(k, v)| (k.clone(), tbgen::signal::format_bitvector(v))).collect();
                    let outputs = match kind {
                        "adder_ok" => step(&[("s", bin((get("a") + get("b")) & 7, 3))]),
                        "adder_nocarry" => step(&[("s", bin((get("a") + get("b")) & 3, 3))]),
                        _ => {
                            q = if get("reset") == 1 {
                                0
                            } else if kind == "counter_saturating" {
                                (q + 1).min(15)
                            } else {
                                (q + 1) % 16
                            };
                            step(&[("q", bin(q, 4))])
                        }
                    };
                    RawTraceStep { inputs, outputs }
                })
                .collect();
            RawTrace { scenario: sc.id.clone(), steps }
        })
        .collect()
}

pub fn run_emulator(script: &str, suite: &StimulusSuite) -> Execution<Vec<RawTrace>> {
    let marker = script.lines().next().unwrap_or("");
    let kind = marker.trim_start_matches("# model: ").split(' ').next().unwrap_or("");
    match kind {
        "adder_ok" | "adder_nocarry" | "counter_ok" | "counter_saturating" => Ok(model_outputs(kind, suite)),
        "counter_crash" => Err(ExecutionFailure::new(
            FailureKind::Exception,
            "Traceback (most recent call last):\n  scenario s0_reset_then_count step 0, in load\nKeyError: 'rst'",
        )),
        other => Err(ExecutionFailure::new(FailureKind::MissingEntryPoint, format!("unknown model {other}"))),
    }
}

pub fn scripted_backend() -> FnBackend {
    FnBackend::new(run_stimulus, run_emulator)
}

// -------------------------------------------------------------- recording

/// Oracle traces of the golden design over the same stimulus the scripted
/// agents produce, used for the corpus `golden_tb.cpp`.
pub fn golden_testbench(pid: &str) -> String {
    let problem = Problem::load(&corpus_dir().join(pid)).unwrap();
    let (scripts, model) = match pid {
        "adder2" => ([ADDER_EXHAUSTIVE, ADDER_CORNERS], "adder_ok"),
        _ => ([COUNTER_COUNT, COUNTER_MID_RESET], "counter_ok"),
    };
    let scenarios = scripts
        .iter()
        .flat_map(|s| run_stimulus(s).unwrap())
        .map(|r| tbgen::signal::Scenario::from_raw(&r, &problem.interface).unwrap())
        .collect();
    let suite = StimulusSuite::new(problem.interface.clone(), scenarios).unwrap();
    let traces = tbgen::signal::traceset_from_raw(&model_outputs(model, &suite), &problem.interface).unwrap();
    emit_testbench(&problem.interface, &traces, &CodegenOptions::for_interface(&problem.interface).unwrap()).unwrap()
}

pub fn golden_traces_ok(ts: &TraceSet, pid: &str) -> bool {
    let kind = if pid == "adder2" { "adder_ok" } else { "counter_ok" };
    let raw: Vec<RawTrace> = ts.traces().iter().map(|t| t.to_raw()).collect();
    let suite_scenarios = ts
        .traces()
        .iter()
        .map(|t| tbgen::signal::Scenario {
            id: t.scenario_id.clone(),
            steps: t.steps.iter().map(|s| tbgen::signal::StimulusStep::new(s.inputs.clone())).collect(),
        })
        .collect();
    let suite = StimulusSuite::new(ts.interface().clone(), suite_scenarios).unwrap();
    raw == model_outputs(kind, &suite)
}

/// Runs gen-tb plus verify on the golden design and on the designated
/// mutant for every problem, recording LLM completions into `llm_dir` and
/// script results into `rt_dir`. Returns the verdicts by (problem, design).
pub fn record_micro_corpus(llm_dir: &Path, rt_dir: &Path, ws_root: &Path) -> tbgen::Result<BTreeMap<(String, String), FinalVerdict>> {
    let sim = VerilatorSimulator::probe("verilator")?;
    let services = Services::new(
        micro_config(),
        Arc::new(RecordingProvider::new(Arc::new(scripted_provider()), llm_dir)),
        Arc::new(RecordingBackend::new(scripted_backend(), rt_dir)),
    );
    let mut out = BTreeMap::new();
    for pid in PROBLEMS {
        let dir = corpus_dir().join(pid);
        let problem = Problem::load(&dir)?;
        let mutant = designated_mutant(pid);
        for design in ["golden", mutant] {
            let source = if design == "golden" {
                golden_source(pid)
            } else {
                std::fs::read_to_string(dir.join("mutants").join(format!("{mutant}.v"))).unwrap()
            };
            let ws = Workspace::new(ws_root.join(design))?.problem(pid)?;
            let gateway = services.gateway(None);
            gen_tb(&services, &problem, &gateway, &ws, false)?;
            let v = verify(&services, &problem, &source, &gateway, &sim, &ws, false)?;
            out.insert((pid.to_string(), design.to_string()), v);
        }
    }
    Ok(out)
}

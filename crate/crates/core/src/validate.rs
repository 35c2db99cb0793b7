// SPDX-License-Identifier: Apache-2.0

//! Judge-aided validation of a design under test.
//!
//! Build and simulate; on failure render a plain-language report, ask the
//! root-cause judge whether the design or the reference model is wrong, and
//! on a model fault refine the model and try again within a small budget.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Arc;
use std::time::Duration;

use serde::Serialize;

use crate::codegen::{emit_testbench, CodegenOptions};
use crate::emulator::{run_candidates, CandidateRun, CandidateSet, EmulatorScript};
use crate::error::{Error, Result};
use crate::improve::{refine, JudgeSelection};
use crate::llm::{extract_code_block, Gateway, SamplingParams, Stage};
use crate::problem::Problem;
use crate::process::run_with_timeout;
use crate::prompts::{self, JudgeMaterial};
use crate::runtime::Backend;
use crate::signal::{format_bitvector, parse_bitvector, ModuleInterface, StimulusSuite, TraceDiff, TraceSet};
use crate::stimulus::ScenarioPlan;
use crate::workspace::ProblemWorkspace;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimOutcome {
    pub passed: bool,
    pub mismatches: Vec<TraceDiff>,
    pub failure_count: usize,
    pub raw_log: String,
    pub build_ok: bool,
}

impl SimOutcome {
    pub fn build_failure(log: String) -> Self {
        Self { passed: false, mismatches: Vec::new(), failure_count: 0, raw_log: log, build_ok: false }
    }
}

/// Everything a simulator needs for one run. `traces` is the trace set the
/// testbench was generated from, when known, for simulators that do not
/// compile it.
pub struct SimJob<'a> {
    pub dut_source: &'a str,
    pub interface: &'a ModuleInterface,
    pub testbench: &'a str,
    pub traces: Option<&'a TraceSet>,
    pub workdir: &'a Path,
}

pub trait Simulator: Send + Sync {
    fn build_and_run(&self, job: &SimJob<'_>) -> Result<SimOutcome>;
    fn name(&self) -> String;
}

#[derive(Debug, Clone)]
pub struct VerilatorSimulator {
    pub binary: PathBuf,
    pub version: String,
    pub build_timeout: Duration,
    pub run_timeout: Duration,
    /// Compile the generated C++ without optimisation. Generated mains are
    /// straight-line code run once, so this only saves build time.
    pub fast_build: bool,
}

impl VerilatorSimulator {
    /// Checks that the toolchain answers `--version`.
    pub fn probe(binary: impl Into<PathBuf>) -> Result<Self> {
        let binary = binary.into();
        let out = run_with_timeout(Command::new(&binary).arg("--version"), Duration::from_secs(30))
            .map_err(|e| Error::Environment(format!("cannot run {}: {e}", binary.display())))?;
        if out.code() != Some(0) {
            return Err(Error::Environment(format!("{} --version failed: {}", binary.display(), out.stderr.trim())));
        }
        Ok(Self {
            binary,
            version: out.stdout.trim().to_string(),
            build_timeout: Duration::from_secs(600),
            run_timeout: Duration::from_secs(60),
            fast_build: true,
        })
    }
}

impl Simulator for VerilatorSimulator {
    fn build_and_run(&self, job: &SimJob<'_>) -> Result<SimOutcome> {
        let module = job.interface.module_name();
        std::fs::create_dir_all(job.workdir).map_err(|e| Error::io(job.workdir, e))?;
        let workdir = job.workdir.canonicalize().map_err(|e| Error::io(job.workdir, e))?;
        crate::util::write_file(&workdir.join("dut.v"), job.dut_source)?;
        crate::util::write_file(&workdir.join("sim_main.cpp"), job.testbench)?;

        let mut build = Command::new(&self.binary);
        build
            .args(["--cc", "--exe", "--build", "-Wno-fatal", "dut.v", "sim_main.cpp", "--top-module", module])
            .current_dir(&workdir);
        if self.fast_build {
            let inherited = std::env::var("MAKEFLAGS").unwrap_or_default();
            build.env("MAKEFLAGS", format!("OPT_FAST=-O0 OPT_SLOW=-O0 OPT_GLOBAL=-O0 {inherited}").trim_end());
        }
        let out = run_with_timeout(&mut build, self.build_timeout).map_err(|e| Error::io(&self.binary, e))?;
        if out.code() != Some(0) {
            let mut log = format!("{}{}", out.stdout, out.stderr);
            if out.timed_out() {
                log.push_str(&format!("\nbuild timed out after {} s\n", self.build_timeout.as_secs()));
            }
            return Ok(SimOutcome::build_failure(log));
        }

        let exe = workdir.join("obj_dir").join(format!("V{module}"));
        let mut run = Command::new(&exe);
        run.current_dir(&workdir);
        let out = run_with_timeout(&mut run, self.run_timeout).map_err(|e| Error::io(&exe, e))?;
        if out.timed_out() {
            return Err(Error::SimTimeout(self.run_timeout.as_secs()));
        }
        let mut outcome = parse_sim_output(&out.stdout, out.code())?;
        outcome.raw_log = format!("{}{}", out.stdout, out.stderr);
        Ok(outcome)
    }

    fn name(&self) -> String {
        format!("verilator ({})", self.version)
    }
}

/// Simulator backed by a closure, for tests and dry runs.
pub struct FnSimulator {
    f: Arc<dyn Fn(&SimJob<'_>) -> Result<SimOutcome> + Send + Sync>,
}

impl FnSimulator {
    pub fn new(f: impl Fn(&SimJob<'_>) -> Result<SimOutcome> + Send + Sync + 'static) -> Self {
        Self { f: Arc::new(f) }
    }
}

impl Simulator for FnSimulator {
    fn build_and_run(&self, job: &SimJob<'_>) -> Result<SimOutcome> {
        (self.f)(job)
    }

    fn name(&self) -> String {
        "fn-simulator".into()
    }
}

/// Inverse of [`crate::codegen::mismatch_line`].
pub fn parse_mismatch_line(line: &str) -> Result<TraceDiff> {
    let bad = |why: &str| Error::Format(format!("{why} in mismatch line {line:?}"));
    let rest = line.strip_prefix("MISMATCH ").ok_or_else(|| bad("missing MISMATCH prefix"))?;
    let fields: Vec<&str> = rest.split(' ').collect();
    let keys = ["scenario", "step", "signal", "expected", "actual"];
    if fields.len() != keys.len() {
        return Err(bad("wrong field count"));
    }
    let mut vals = Vec::with_capacity(5);
    for (f, k) in fields.iter().zip(keys) {
        let v = f.strip_prefix(k).and_then(|s| s.strip_prefix('=')).ok_or_else(|| bad(&format!("expected {k}=")))?;
        if v.is_empty() {
            return Err(bad(&format!("empty {k}")));
        }
        vals.push(v);
    }
    let step_index = vals[1].parse::<usize>().map_err(|_| bad("non-numeric step"))?;
    let expected = parse_bitvector(vals[3], vals[3].len())?;
    let actual = parse_bitvector(vals[4], vals[4].len())?;
    if expected.width() != actual.width() {
        return Err(bad("expected/actual width differ"));
    }
    Ok(TraceDiff { scenario_id: vals[0].to_string(), step_index, signal: vals[2].to_string(), expected, actual })
}

/// Reads the testbench's stdout. Exit status and summary line must agree.
pub fn parse_sim_output(stdout: &str, exit_code: Option<i32>) -> Result<SimOutcome> {
    let mut mismatches = Vec::new();
    let mut summary: Option<Option<usize>> = None;
    for line in stdout.lines() {
        let line = line.trim_end();
        if line.starts_with("MISMATCH ") {
            mismatches.push(parse_mismatch_line(line)?);
        } else if line == "RESULT: PASS" {
            summary = Some(None);
        } else if let Some(n) = line.strip_prefix("RESULT: FAIL failures=") {
            let n = n.parse().map_err(|_| Error::Protocol(format!("bad summary line {line:?}")))?;
            summary = Some(Some(n));
        }
    }
    let outcome = |passed, failure_count| SimOutcome {
        passed,
        mismatches: mismatches.clone(),
        failure_count,
        raw_log: stdout.to_string(),
        build_ok: true,
    };
    match (exit_code, summary) {
        (Some(0), Some(None)) if mismatches.is_empty() => Ok(outcome(true, 0)),
        (Some(1), Some(Some(n))) if n > 0 && n >= mismatches.len() && !mismatches.is_empty() => Ok(outcome(false, n)),
        (code, s) => Err(Error::Protocol(format!(
            "exit status {code:?} disagrees with summary {s:?} ({} mismatch lines)",
            mismatches.len()
        ))),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiagnosticReport {
    pub narrative: String,
    pub mismatches: Vec<TraceDiff>,
    pub scenario_notes: BTreeMap<String, String>,
}

const EXCERPT_CHARS: usize = 80;

/// Scenario ids are `s<sample>_<name>` with an optional `_<n>` suffix; the
/// plan usually mentions `<name>` in some spelling.
fn plan_excerpt<'a>(plan: &'a ScenarioPlan, scenario_id: &str) -> Option<String> {
    let mut name = scenario_id;
    if let Some(rest) = name.strip_prefix('s') {
        if let Some((digits, tail)) = rest.split_once('_') {
            if !digits.is_empty() && digits.chars().all(|c| c.is_ascii_digit()) && !tail.is_empty() {
                name = tail;
            }
        }
    }
    let mut needles = vec![scenario_id.to_lowercase(), name.to_lowercase(), name.replace('_', " ").to_lowercase()];
    if let Some((base, n)) = name.rsplit_once('_') {
        if n.chars().all(|c| c.is_ascii_digit()) && !base.is_empty() {
            needles.push(base.to_lowercase());
            needles.push(base.replace('_', " ").to_lowercase());
        }
    }
    let lines: Vec<&str> = plan.text.lines().map(str::trim).collect();
    let at = lines.iter().position(|l| {
        let lower = l.to_lowercase();
        needles.iter().any(|n| lower.contains(n.as_str()))
    })?;
    let strip = |l: &'a str| -> &'a str {
        l.trim_start_matches(|c: char| c == '-' || c == '*' || c == '#' || c.is_ascii_digit() || c == '.' || c == ')')
            .trim()
    };
    // a bare "id: <name>" heading says nothing new; quote the line under it
    let head = strip(lines[at]);
    let bare = head.strip_prefix("id:").map(str::trim).is_some_and(|rest| needles.iter().any(|n| rest.to_lowercase() == *n));
    let line = if bare {
        let next = lines[at + 1..].iter().map(|l| strip(l)).find(|l| !l.is_empty())?;
        if next.starts_with("id:") {
            return None;
        }
        next
    } else {
        head
    };
    if line.is_empty() {
        return None;
    }
    Some(if line.chars().count() > EXCERPT_CHARS {
        format!("{}...", line.chars().take(EXCERPT_CHARS).collect::<String>().trim_end())
    } else {
        line.to_string()
    })
}

fn value(v: &crate::signal::BitVector) -> String {
    format!("{} ({})", format_bitvector(v), v.value())
}

/// Deterministic rule-based rendering of a failed simulation.
///
/// Consecutive steps of one signal in one scenario collapse into a single
/// range sentence quoting the first and last step.
pub fn render_report(outcome: &SimOutcome, plan: &ScenarioPlan, problem: &Problem) -> Result<DiagnosticReport> {
    if outcome.passed || !outcome.build_ok || outcome.mismatches.is_empty() {
        return Err(Error::Invalid("a report needs a built, failed simulation with mismatches".into()));
    }
    let mut notes = BTreeMap::new();
    for d in &outcome.mismatches {
        if !notes.contains_key(&d.scenario_id) {
            if let Some(ex) = plan_excerpt(plan, &d.scenario_id) {
                notes.insert(d.scenario_id.clone(), ex);
            }
        }
    }
    let where_ = |id: &str| match notes.get(id) {
        Some(ex) => format!("In scenario {id} ({ex})"),
        None => format!("In scenario {id}"),
    };

    // Runs of (scenario, signal) over consecutive steps, in first-seen order.
    let mut runs: Vec<Vec<&TraceDiff>> = Vec::new();
    for d in &outcome.mismatches {
        let ext = runs.iter_mut().rev().find(|r| {
            let last = r.last().unwrap();
            last.scenario_id == d.scenario_id && last.signal == d.signal
        });
        match ext {
            Some(r) if r.last().unwrap().step_index + 1 == d.step_index => r.push(d),
            _ => runs.push(vec![d]),
        }
    }

    let mut text = format!(
        "Simulation of {} against the reference waveforms failed with {} mismatching output value{}.\n\n",
        problem.interface.module_name(),
        outcome.failure_count,
        if outcome.failure_count == 1 { "" } else { "s" }
    );
    for r in &runs {
        let first = r[0];
        if r.len() == 1 {
            text.push_str(&format!(
                "{}, at step {}, output {} was expected to be {} but the design produced {}.\n",
                where_(&first.scenario_id),
                first.step_index,
                first.signal,
                value(&first.expected),
                value(&first.actual)
            ));
        } else {
            let last = r[r.len() - 1];
            text.push_str(&format!(
                "{}, at steps {} to {}, output {} mismatched on every step; at step {} it was expected to be {} but the design produced {}, and at step {} it was expected to be {} but the design produced {}.\n",
                where_(&first.scenario_id),
                first.step_index,
                last.step_index,
                first.signal,
                first.step_index,
                value(&first.expected),
                value(&first.actual),
                last.step_index,
                value(&last.expected),
                value(&last.actual)
            ));
        }
    }
    let hidden = outcome.failure_count.saturating_sub(outcome.mismatches.len());
    if hidden > 0 {
        text.push_str(&format!("{hidden} further mismatches were not printed by the testbench.\n"));
    }

    let mut signals: Vec<&str> = Vec::new();
    for d in &outcome.mismatches {
        if !signals.contains(&d.signal.as_str()) {
            signals.push(&d.signal);
        }
    }
    let widths: Vec<String> = signals
        .iter()
        .map(|s| {
            let w = problem.interface.port(s).map(|p| p.width).unwrap_or(0);
            format!("{s} ({w} bit{})", if w == 1 { "" } else { "s" })
        })
        .collect();
    text.push_str(&format!(
        "\nWidth reminder: mismatching signals are {}. Every value above is an unsigned binary string, most significant bit first, \
exactly as wide as the declared port; the decimal in parentheses is its unsigned value. Verilog range indexing follows the declaration, \
so for reg [4:1] q = 4'b1000 the bit q[4] is 1 and q[1] is 0: the leftmost character is always the highest declared index, \
whatever the range bounds are.\n",
        widths.join(", ")
    ));
    Ok(DiagnosticReport { narrative: text, mismatches: outcome.mismatches.clone(), scenario_notes: notes })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RootCause {
    #[serde(rename = "DUT_FAULT")]
    DutFault,
    #[serde(rename = "MODEL_FAULT")]
    ModelFault,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RootCauseVerdict {
    pub cause: RootCause,
    pub rationale: String,
    /// No usable reply after the re-ask; the cause defaulted to the design.
    pub fallback: bool,
}

#[derive(serde::Deserialize)]
struct CauseReply {
    cause: String,
    #[serde(default)]
    rationale: String,
}

fn parse_cause(text: &str) -> std::result::Result<RootCauseVerdict, String> {
    let body = extract_code_block(text, "json").map_err(|_| "no fenced json block".to_string())?;
    let reply: CauseReply = serde_json::from_str(&body).map_err(|e| format!("invalid JSON ({e})"))?;
    let cause = match reply.cause.trim().to_ascii_uppercase().as_str() {
        "DUT" => RootCause::DutFault,
        "MODEL" => RootCause::ModelFault,
        other => return Err(format!("cause must be \"DUT\" or \"MODEL\", got {other:?}")),
    };
    Ok(RootCauseVerdict { cause, rationale: reply.rationale, fallback: false })
}

pub fn judge_root_cause(
    report: &DiagnosticReport,
    problem: &Problem,
    model: &EmulatorScript,
    dut_source: &str,
    gateway: &Gateway,
) -> Result<RootCauseVerdict> {
    let prompt = prompts::root_cause_prompt(problem, dut_source, &model.source, &report.narrative);
    let params = SamplingParams::new(0.0, 1);
    let first = gateway.complete(&prompt, &params, Stage::JudgeValidate)?.remove(0).text;
    let complaint = match parse_cause(&first) {
        Ok(v) => return Ok(v),
        Err(e) => e,
    };
    log::warn!(target: "judge_validate", "root-cause reply unusable ({complaint}); asking again");
    let second = gateway.complete(&prompts::reask(&prompt, &complaint), &params, Stage::JudgeValidate)?.remove(0).text;
    match parse_cause(&second) {
        Ok(v) => Ok(v),
        Err(e) => {
            log::error!(target: "judge_validate", "JudgeParseError: {e}; assuming the design is at fault");
            Ok(RootCauseVerdict { cause: RootCause::DutFault, rationale: format!("judge reply unusable: {e}"), fallback: true })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
pub enum DutStatus {
    #[serde(rename = "PASS")]
    Pass,
    #[serde(rename = "FAIL")]
    Fail,
}

impl DutStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            DutStatus::Pass => "PASS",
            DutStatus::Fail => "FAIL",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationRound {
    pub outcome: SimOutcome,
    pub verdict: Option<RootCauseVerdict>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FinalVerdict {
    pub dut_status: DutStatus,
    /// Number of root-cause judge calls made.
    pub rounds_used: usize,
    pub history: Vec<ValidationRound>,
    /// Model, traces and testbench in force at the end of the loop.
    pub model: EmulatorScript,
    pub traces: TraceSet,
    pub testbench: String,
}

impl FinalVerdict {
    pub fn verdict_line(&self) -> String {
        format!("VERDICT: {} rounds={}", self.dut_status.as_str(), self.rounds_used)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ValidateConfig {
    pub budget: usize,
    pub workers: usize,
}

impl Default for ValidateConfig {
    fn default() -> Self {
        Self { budget: 2, workers: 4 }
    }
}

/// Inputs to [`validate_loop`] that stay fixed across rounds.
pub struct ValidateInputs<'a> {
    pub problem: &'a Problem,
    pub plan: &'a ScenarioPlan,
    pub suite: &'a StimulusSuite,
    pub dut_source: &'a str,
}

#[derive(Serialize)]
struct RoundFile<'a> {
    round: usize,
    build_ok: bool,
    passed: bool,
    failure_count: usize,
    mismatches: Vec<String>,
    verdict: Option<&'a RootCauseVerdict>,
}

fn persist(ws: Option<&ProblemWorkspace>, round: usize, tb: &str, r: &ValidationRound, report: Option<&DiagnosticReport>) -> Result<()> {
    let Some(ws) = ws else { return Ok(()) };
    let dir = ws.validate_dir(round);
    ws.write(&dir.join("sim_main.cpp"), tb)?;
    ws.write(&dir.join("sim.log"), &r.outcome.raw_log)?;
    if let Some(rep) = report {
        ws.write(&dir.join("report.txt"), &rep.narrative)?;
    }
    let file = RoundFile {
        round,
        build_ok: r.outcome.build_ok,
        passed: r.outcome.passed,
        failure_count: r.outcome.failure_count,
        mismatches: r.outcome.mismatches.iter().map(crate::codegen::mismatch_line).collect(),
        verdict: r.verdict.as_ref(),
    };
    ws.write(&dir.join("verdict.json"), crate::signal::to_pretty(&file))
}

/// Simulate, and on failure let the root-cause judge decide who is wrong.
///
/// A design fault ends the loop with FAIL. A model fault refines the model
/// (one sample, temperature 0), regenerates its traces and simulates again.
/// At most `config.budget` judge calls are made. An unreachable provider
/// yields FAIL, never PASS. A refined model that does not run also ends the
/// loop with FAIL.
pub fn validate_loop(
    inputs: &ValidateInputs<'_>,
    model: EmulatorScript,
    traces: TraceSet,
    config: &ValidateConfig,
    gateway: &Gateway,
    backend: &dyn Backend,
    simulator: &dyn Simulator,
    ws: Option<&ProblemWorkspace>,
) -> Result<FinalVerdict> {
    if config.budget == 0 {
        return Err(Error::Invalid("validation budget must be >= 1".into()));
    }
    let problem = inputs.problem;
    let opts = CodegenOptions::for_interface(&problem.interface)?;
    let scratch = tempfile::tempdir().map_err(|e| Error::io(std::env::temp_dir(), e))?;
    let mut model = model;
    let mut traces = traces;
    let mut history = Vec::new();
    let mut judge_calls = 0;
    let mut round = 0;
    loop {
        let testbench = emit_testbench(&problem.interface, &traces, &opts)?;
        let workdir = match ws {
            Some(ws) => ws.validate_dir(round).join("build"),
            None => scratch.path().join(format!("validate_{round}")),
        };
        let job = SimJob { dut_source: inputs.dut_source, interface: &problem.interface, testbench: &testbench, traces: Some(&traces), workdir: &workdir };
        let outcome = simulator.build_and_run(&job)?;
        if !outcome.build_ok {
            let r = ValidationRound { outcome: outcome.clone(), verdict: None };
            persist(ws, round, &testbench, &r, None)?;
            log::error!(target: "judge_validate", "{}: simulation build failed", problem.id);
            return Err(Error::Build { log: outcome.raw_log });
        }
        if outcome.passed {
            let r = ValidationRound { outcome, verdict: None };
            persist(ws, round, &testbench, &r, None)?;
            history.push(r);
            log::info!(target: "judge_validate", "{}: round {round} PASS", problem.id);
            return done(judge_calls, DutStatus::Pass, history, model, traces, testbench);
        }

        let report = render_report(&outcome, inputs.plan, problem)?;
        let verdict = match judge_root_cause(&report, problem, &model, inputs.dut_source, gateway) {
            Ok(v) => Some(v),
            Err(Error::Provider(e)) => {
                log::error!(target: "judge_validate", "{}: judge unavailable ({e}); keeping the simulation verdict", problem.id);
                None
            }
            Err(e) => return Err(e),
        };
        if verdict.is_some() {
            judge_calls += 1;
        }
        let r = ValidationRound { outcome, verdict };
        persist(ws, round, &testbench, &r, Some(&report))?;
        let cause = r.verdict.as_ref().map(|v| v.cause);
        history.push(r);
        log::info!(target: "judge_validate", "{}: round {round} FAIL, judged {cause:?}", problem.id);
        if cause != Some(RootCause::ModelFault) || judge_calls >= config.budget {
            return done(judge_calls, DutStatus::Fail, history, model, traces, testbench);
        }

        // Model fault: one deterministic rewrite, then regenerate traces.
        let rationale = history.last().and_then(|h| h.verdict.as_ref()).map(|v| v.rationale.clone()).unwrap_or_default();
        let material = JudgeMaterial {
            problem,
            candidates: vec![(model.candidate_index, model.source.as_str(), None)],
            consensus: "The reference model was simulated against the design under test and judged to be wrong.".into(),
            evidence: vec![(vec![model.candidate_index], &traces)],
        };
        let selection = JudgeSelection {
            best_index: model.candidate_index,
            aligned: false,
            analysis: format!("{}\n\nRoot-cause judge: {}", report.narrative.trim_end(), rationale),
            fallback: false,
        };
        let refined = match refine(&model, &selection, &material, 1, 0.0, Stage::JudgeValidate, gateway) {
            Ok(set) => set,
            Err(e @ (Error::EmulatorGen(_) | Error::Provider(_))) => {
                log::error!(target: "judge_validate", "{}: model refinement failed ({e})", problem.id);
                return done(judge_calls, DutStatus::Fail, history, model, traces, testbench);
            }
            Err(e) => return Err(e),
        };
        let next = refined.candidates[0].clone();
        let runs: Vec<CandidateRun> = run_candidates(&CandidateSet { candidates: vec![next.clone()], params: refined.params }, inputs.suite, backend, config.workers)?;
        match runs.into_iter().next().map(|r| r.outcome) {
            Some(Ok(ts)) => {
                model = next;
                traces = ts;
            }
            Some(Err(f)) => {
                log::error!(target: "judge_validate", "{}: refined model failed to run ({f})", problem.id);
                return done(judge_calls, DutStatus::Fail, history, model, traces, testbench);
            }
            None => unreachable!("one candidate in, one run out"),
        }
        if let Some(ws) = ws {
            let dir = ws.validate_dir(round + 1);
            ws.write(&dir.join("Func_model.py"), format!("{}\n", model.source))?;
            ws.write(&dir.join("Reference_signal.json"), crate::signal::traceset_to_json(&traces))?;
        }
        round += 1;
    }
}

fn done(
    rounds_used: usize,
    dut_status: DutStatus,
    history: Vec<ValidationRound>,
    model: EmulatorScript,
    traces: TraceSet,
    testbench: String,
) -> Result<FinalVerdict> {
    Ok(FinalVerdict { dut_status, rounds_used, history, model, traces, testbench })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codegen::mismatch_line;
    use crate::signal::PortDecl;

    fn diff(id: &str, step: usize, sig: &str, e: &str, a: &str) -> TraceDiff {
        TraceDiff {
            scenario_id: id.into(),
            step_index: step,
            signal: sig.into(),
            expected: parse_bitvector(e, e.len()).unwrap(),
            actual: parse_bitvector(a, a.len()).unwrap(),
        }
    }

    fn problem() -> Problem {
        let i = ModuleInterface::new("top_module", vec![PortDecl::input("clk", 1), PortDecl::input("d", 4), PortDecl::output("q", 4), PortDecl::output("z", 1)]).unwrap();
        Problem::new("p", "spec", i, None).unwrap()
    }

    fn failed(m: Vec<TraceDiff>) -> SimOutcome {
        SimOutcome { passed: false, failure_count: m.len(), mismatches: m, raw_log: String::new(), build_ok: true }
    }

    #[test]
    fn line_round_trip() {
        let d = diff("s0_reset", 7, "q", "1000", "0001");
        let line = mismatch_line(&d);
        assert_eq!(line, "MISMATCH scenario=s0_reset step=7 signal=q expected=1000 actual=0001");
        assert_eq!(parse_mismatch_line(&line).unwrap(), d);
        for bad in [
            "MISMATCH scenario=a step=x signal=q expected=1 actual=0",
            "MISMATCH scenario=a step=1 signal=q expected=10 actual=0",
            "MISMATCH scenario=a step=1 signal=q expected=12 actual=00",
            "MISMATCH step=1 scenario=a signal=q expected=1 actual=0",
            "MISMATCH scenario=a step=1 signal=q expected=1 actual=0 extra=1",
        ] {
            assert!(parse_mismatch_line(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn exit_code_and_summary_must_agree() {
        let pass = parse_sim_output("RESULT: PASS\n", Some(0)).unwrap();
        assert!(pass.passed && pass.build_ok && pass.failure_count == 0);
        let m = "MISMATCH scenario=a step=1 signal=q expected=1 actual=0\nRESULT: FAIL failures=3\n";
        let fail = parse_sim_output(m, Some(1)).unwrap();
        assert_eq!((fail.passed, fail.failure_count, fail.mismatches.len()), (false, 3, 1));
        assert!(matches!(parse_sim_output("RESULT: PASS\n", Some(1)), Err(Error::Protocol(_))));
        assert!(matches!(parse_sim_output(m, Some(0)), Err(Error::Protocol(_))));
        assert!(matches!(parse_sim_output("", Some(0)), Err(Error::Protocol(_))));
        assert!(matches!(parse_sim_output("RESULT: FAIL failures=0\n", Some(1)), Err(Error::Protocol(_))));
        assert!(matches!(parse_sim_output("RESULT: PASS\n", None), Err(Error::Protocol(_))));
    }

    #[test]
    fn report_quotes_binary_and_decimal() {
        let plan = ScenarioPlan { text: "1. reset: hold reset high then count\n2. wrap: count past 15".into() };
        let rep = render_report(&failed(vec![diff("s0_reset", 3, "q", "1000", "0001")]), &plan, &problem()).unwrap();
        assert!(rep.narrative.contains(
            "In scenario s0_reset (reset: hold reset high then count), at step 3, output q was expected to be 1000 (8) but the design produced 0001 (1)."
        ), "{}", rep.narrative);
        assert!(rep.narrative.contains("reg [4:1] q = 4'b1000"));
        assert!(rep.narrative.contains("q (4 bits)"));
        assert_eq!(rep.scenario_notes["s0_reset"], "reset: hold reset high then count");
    }

    #[test]
    fn consecutive_steps_collapse() {
        let mut m: Vec<TraceDiff> = (2..12).map(|k| diff("s1_wrap_2", k, "q", "0001", "0000")).collect();
        m.insert(3, diff("s1_wrap_2", 5, "z", "1", "0"));
        let plan = ScenarioPlan { text: "- wrap: count past 15".into() };
        let rep = render_report(&failed(m), &plan, &problem()).unwrap();
        let sentences: Vec<&str> = rep.narrative.lines().filter(|l| l.starts_with("In scenario")).collect();
        assert_eq!(sentences.len(), 2, "{}", rep.narrative);
        assert!(sentences[0].contains("at steps 2 to 11, output q"));
        assert!(sentences[0].starts_with("In scenario s1_wrap_2 (wrap: count past 15)"));
        assert!(sentences[1].contains("at step 5, output z"));
        assert!(rep.narrative.contains("z (1 bit)"));
        // deterministic
        assert_eq!(rep, render_report(&failed(rep.mismatches.clone()), &plan, &problem()).unwrap());
    }

    #[test]
    fn id_heading_quotes_the_line_below() {
        let plan = ScenarioPlan { text: "1. id: wrap\n   count past 15\n2. id: hold\n".into() };
        assert_eq!(plan_excerpt(&plan, "s0_wrap").as_deref(), Some("count past 15"));
        assert_eq!(plan_excerpt(&plan, "s0_hold"), None);
        assert_eq!(plan_excerpt(&plan, "s0_other"), None);
    }

    #[test]
    fn report_requires_a_failure() {
        let ok = SimOutcome { passed: true, mismatches: vec![], failure_count: 0, raw_log: String::new(), build_ok: true };
        assert!(render_report(&ok, &ScenarioPlan { text: String::new() }, &problem()).is_err());
    }

    #[test]
    fn cause_parsing() {
        assert_eq!(parse_cause("```json\n{\"cause\":\"MODEL\",\"rationale\":\"x\"}\n```").unwrap().cause, RootCause::ModelFault);
        assert_eq!(parse_cause("```json\n{\"cause\":\"dut\"}\n```").unwrap().cause, RootCause::DutFault);
        assert!(parse_cause("```json\n{\"cause\":\"both\"}\n```").is_err());
        assert!(parse_cause("the DUT").is_err());
    }
}

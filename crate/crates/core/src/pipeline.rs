// SPDX-License-Identifier: Apache-2.0

//! End-to-end wiring: stimulus, emulator, self-improvement, testbench
//! generation and judge-aided validation, plus the command entry points
//! used by the `tbgen` binary.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::codegen::{emit_testbench, CodegenOptions};
use crate::config::{ProviderKind, RunConfig, RuntimeKind};
use crate::emulator::EmulatorScript;
use crate::error::{Error, Result};
use crate::eval::{self, BenchOptions, GoldenRun, GoldenRunner, ProblemRecord};
use crate::improve::{improve_loop, ImproveConfig};
use crate::llm::{ledger_report, FixtureProvider, Gateway, Provider, RecordingProvider, RemoteProvider};
use crate::problem::Problem;
use crate::runtime::{Backend, FixtureBackend, PythonBackend, RecordingBackend};
use crate::signal::{parse_verilog_interface, stimulus_from_json, stimulus_to_json, traceset_from_json, StimulusSuite, TraceSet};
use crate::stimulus::{collect_stimuli, design_scenarios, generate_stimulus_scripts, ScenarioPlan, SuiteLimits};
use crate::util::{read_file, write_file};
use crate::validate::{validate_loop, DutStatus, FinalVerdict, Simulator, ValidateConfig, ValidateInputs, VerilatorSimulator};
use crate::workspace::{ProblemWorkspace, Workspace};

static INTERRUPTED: AtomicBool = AtomicBool::new(false);

/// Ctrl-C sets a flag; stages check it between steps, so everything
/// finished so far is already persisted when the run stops.
pub fn install_interrupt_handler() {
    let _ = ctrlc::set_handler(|| {
        if INTERRUPTED.swap(true, Ordering::SeqCst) {
            std::process::exit(130);
        }
        log::warn!(target: "pipeline", "interrupt received; stopping after the current step");
    });
}

pub fn interrupted() -> &'static AtomicBool {
    &INTERRUPTED
}

fn checkpoint() -> Result<()> {
    if INTERRUPTED.load(Ordering::SeqCst) {
        Err(Error::Interrupted)
    } else {
        Ok(())
    }
}

/// Provider and script runner shared by every problem of a run.
#[derive(Clone)]
pub struct Services {
    pub config: RunConfig,
    pub provider: Arc<dyn Provider>,
    pub backend: Arc<dyn Backend>,
}

impl Services {
    pub fn new(config: RunConfig, provider: Arc<dyn Provider>, backend: Arc<dyn Backend>) -> Self {
        Self { config, provider, backend }
    }

    pub fn from_config(config: &RunConfig) -> Result<Self> {
        let p = &config.provider;
        let provider: Arc<dyn Provider> = match p.kind {
            ProviderKind::Fixture => Arc::new(FixtureProvider::new(&p.fixture_dir)),
            ProviderKind::Remote => Arc::new(RemoteProvider::new(p.remote.clone())?),
            ProviderKind::Record => {
                Arc::new(RecordingProvider::new(Arc::new(RemoteProvider::new(p.remote.clone())?), &p.fixture_dir))
            }
        };
        let r = &config.runtime;
        let python = || {
            let mut b = PythonBackend::new(&r.interpreter, &r.tail_dir);
            b.stimulus_timeout = Duration::from_secs(r.stimulus_timeout_s);
            b.candidate_timeout = Duration::from_secs(r.candidate_timeout_s);
            b
        };
        let backend: Arc<dyn Backend> = match r.kind {
            RuntimeKind::Python => Arc::new(python()),
            RuntimeKind::Fixture => Arc::new(FixtureBackend::new(&r.fixture_dir)),
            RuntimeKind::Record => Arc::new(RecordingBackend::new(python(), &r.fixture_dir)),
        };
        Ok(Self::new(config.clone(), provider, backend))
    }

    /// Fresh gateway (and token ledger) for one problem. Transcripts are
    /// kept only when debug logging is on.
    pub fn gateway(&self, ws: Option<&ProblemWorkspace>) -> Gateway {
        let gw = Gateway::new(self.provider.clone());
        match ws {
            Some(ws) if log::log_enabled!(target: "llm", log::Level::Debug) => gw.with_transcripts(ws.transcripts()),
            _ => gw,
        }
    }

    fn improve_config(&self) -> ImproveConfig {
        ImproveConfig {
            max_iterations: self.config.improve_iterations,
            n_samples: self.config.emulator_samples,
            temperature: self.config.temperature,
            judge_temperature: self.config.judge_temperature,
            workers: self.config.workers,
        }
    }
}

pub fn simulator_from_config(config: &RunConfig) -> Result<VerilatorSimulator> {
    let mut sim = VerilatorSimulator::probe(&config.simulator.binary)?;
    sim.build_timeout = Duration::from_secs(config.simulator.build_timeout_s);
    sim.run_timeout = Duration::from_secs(config.simulator.run_timeout_s);
    sim.fast_build = config.simulator.fast_build;
    Ok(sim)
}

const STAGES: [&str; 4] = ["scenarios", "stimulus", "improve", "codegen"];

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
struct PipelineState {
    completed: Vec<String>,
    model_index: usize,
    model_generation: usize,
    aligned: bool,
    improve_rounds: usize,
}

impl PipelineState {
    fn done(&self, stage: &str) -> bool {
        self.completed.iter().any(|s| s == stage)
    }

    fn mark(&mut self, ws: &ProblemWorkspace, stage: &str) -> Result<()> {
        if !self.done(stage) {
            self.completed.push(stage.to_string());
        }
        ws.write(&ws.state(), crate::signal::to_pretty(self))
    }
}

fn load_state(ws: &ProblemWorkspace) -> Result<PipelineState> {
    let path = ws.state();
    if !path.exists() {
        return Ok(PipelineState::default());
    }
    serde_json::from_str(&read_file(&path)?).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

/// Everything `gen-tb` produces.
#[derive(Debug, Clone)]
pub struct Testbench {
    pub plan: ScenarioPlan,
    pub suite: StimulusSuite,
    pub model: EmulatorScript,
    pub traces: TraceSet,
    pub testbench: String,
    /// Whether the judge called the final model aligned with the spec.
    pub aligned: bool,
    pub improve_rounds: usize,
    /// Stages skipped because a previous run completed them.
    pub resumed: Vec<String>,
}

fn strip_newline(s: String) -> String {
    s.strip_suffix('\n').map(str::to_string).unwrap_or(s)
}

/// Runs (or with `resume`, continues) the generation stages for `problem`,
/// persisting `Input_signal.json`, `Reference_signal.json`, `Func_model.py`
/// and `sim_main.cpp` into `ws`.
pub fn gen_tb(services: &Services, problem: &Problem, gateway: &Gateway, ws: &ProblemWorkspace, resume: bool) -> Result<Testbench> {
    problem.validate()?;
    let cfg = &services.config;
    let mut state = if resume { load_state(ws)? } else { PipelineState::default() };
    if !resume {
        ws.write(&ws.state(), crate::signal::to_pretty(&state))?;
    }
    let mut resumed = Vec::new();
    let skip = |stage: &str, resumed: &mut Vec<String>, state: &PipelineState| {
        let s = state.done(stage);
        if s {
            log::info!(target: "pipeline", "{}: {stage} already complete, skipped", problem.id);
            resumed.push(stage.to_string());
        }
        s
    };

    checkpoint()?;
    let plan = if skip(STAGES[0], &mut resumed, &state) {
        ScenarioPlan { text: strip_newline(read_file(&ws.testcase_desc())?) }
    } else {
        let plan = design_scenarios(problem, gateway, cfg.temperature, Some(ws))?;
        state.mark(ws, STAGES[0])?;
        plan
    };

    checkpoint()?;
    let suite = if skip(STAGES[1], &mut resumed, &state) {
        stimulus_from_json(&read_file(&ws.input_signal())?, &problem.interface)?
    } else {
        let scripts = generate_stimulus_scripts(problem, &plan, cfg.stimulus_samples, cfg.temperature, gateway, Some(ws))?;
        let limits = SuiteLimits { max_scenarios: cfg.max_scenarios, max_total_steps: cfg.max_total_steps };
        let suite = collect_stimuli(&scripts, &problem.interface, services.backend.as_ref(), cfg.workers, limits)?;
        ws.write(&ws.input_signal(), stimulus_to_json(&suite))?;
        log::info!(
            target: "stimulus",
            "{}: {} scenarios, {} steps",
            problem.id,
            suite.scenarios().len(),
            suite.total_steps()
        );
        state.mark(ws, STAGES[1])?;
        suite
    };

    checkpoint()?;
    let (model, traces) = if skip(STAGES[2], &mut resumed, &state) {
        let model = EmulatorScript {
            source: strip_newline(read_file(&ws.reference_model())?),
            candidate_index: state.model_index,
            generation: state.model_generation,
        };
        let traces = traceset_from_json(&read_file(&ws.reference_signal())?, &problem.interface)?;
        traces.check_against(&suite)?;
        (model, traces)
    } else {
        let out = improve_loop(problem, &suite, &services.improve_config(), gateway, services.backend.as_ref(), Some(ws))?;
        state.model_index = out.model.candidate_index;
        state.model_generation = out.model.generation;
        state.aligned = out.aligned;
        state.improve_rounds = out.rounds;
        state.mark(ws, STAGES[2])?;
        (out.model, out.traces)
    };

    checkpoint()?;
    let testbench = if skip(STAGES[3], &mut resumed, &state) {
        read_file(&ws.sim_main())?
    } else {
        let opts = CodegenOptions {
            max_scenarios: cfg.max_scenarios,
            max_total_steps: cfg.max_total_steps,
            ..CodegenOptions::for_interface(&problem.interface)?
        };
        let tb = emit_testbench(&problem.interface, &traces, &opts)?;
        ws.write(&ws.sim_main(), &tb)?;
        state.mark(ws, STAGES[3])?;
        tb
    };
    Ok(Testbench {
        plan,
        suite,
        model,
        traces,
        testbench,
        aligned: state.aligned,
        improve_rounds: state.improve_rounds,
        resumed,
    })
}

/// Validates `dut_source` with the testbench in `ws`, generating it first
/// when `full` is set and no finished one exists.
pub fn verify(
    services: &Services,
    problem: &Problem,
    dut_source: &str,
    gateway: &Gateway,
    simulator: &dyn Simulator,
    ws: &ProblemWorkspace,
    full: bool,
) -> Result<FinalVerdict> {
    let dut_iface = parse_verilog_interface(dut_source)?;
    if dut_iface.ports() != problem.interface.ports() {
        return Err(Error::BadProblem(format!(
            "design under test has ports {:?}, the problem declares {:?}",
            dut_iface.ports().iter().map(|p| &p.name).collect::<Vec<_>>(),
            problem.interface.ports().iter().map(|p| &p.name).collect::<Vec<_>>()
        )));
    }
    let finished = load_state(ws)?.done("codegen");
    if !finished && !full {
        return Err(Error::BadProblem(format!(
            "no generated testbench in {}; run gen-tb first or pass --full",
            ws.dir().display()
        )));
    }
    let tb = gen_tb(services, problem, gateway, ws, true)?;
    checkpoint()?;
    let inputs = ValidateInputs { problem, plan: &tb.plan, suite: &tb.suite, dut_source };
    let config = ValidateConfig { budget: services.config.validation_budget, workers: services.config.workers };
    validate_loop(&inputs, tb.model, tb.traces, &config, gateway, services.backend.as_ref(), simulator, Some(ws))
}

/// Golden-design pipeline for the benchmark harness.
pub struct PipelineRunner<'a> {
    pub services: &'a Services,
    pub simulator: &'a dyn Simulator,
    pub resume: bool,
}

impl GoldenRunner for PipelineRunner<'_> {
    fn run_golden(&self, record: &ProblemRecord, ws: &ProblemWorkspace) -> Result<GoldenRun> {
        let started = Instant::now();
        let gateway = self.services.gateway(Some(ws));
        let result = (|| {
            gen_tb(self.services, &record.problem, &gateway, ws, self.resume)?;
            verify(self.services, &record.problem, &record.golden_dut, &gateway, self.simulator, ws, false)
        })();
        let code = match &result {
            Ok(v) if v.dut_status == DutStatus::Pass => 0,
            Ok(_) => 1,
            Err(e) => e.exit_code(),
        };
        write_run_meta(ws.run_meta(), "eval", &self.services.config, &gateway, Some(&self.simulator.name()), started, code)?;
        let v = result?;
        Ok(GoldenRun {
            pre_judge: if v.history[0].outcome.passed { DutStatus::Pass } else { DutStatus::Fail },
            post_judge: v.dut_status,
            rounds_used: v.rounds_used,
            testbench: v.testbench,
            traces: v.traces,
        })
    }
}

fn write_run_meta(
    path: PathBuf,
    command: &str,
    config: &RunConfig,
    gateway: &Gateway,
    simulator: Option<&str>,
    started: Instant,
    exit_code: i32,
) -> Result<()> {
    let meta = json!({
        "command": command,
        "config": config,
        "tool_versions": {
            "tbgen": env!("CARGO_PKG_VERSION"),
            "simulator": simulator,
            "provider": gateway.provider_name(),
        },
        "token_ledger": ledger_report(&gateway.ledger()),
        "elapsed_s": started.elapsed().as_secs_f64(),
        "exit_code": exit_code,
    });
    write_file(&path, crate::signal::to_pretty(&meta))
}

/// Writes `error.json` next to the run's other artifacts and returns the
/// exit code.
pub fn report_error(path: &Path, e: &Error) -> i32 {
    log::error!(target: "pipeline", "{}: {e}", e.kind());
    let mut body = json!({ "kind": e.kind(), "message": e.to_string(), "exit_code": e.exit_code() });
    if let Error::Build { log } = e {
        body["log"] = json!(log);
    }
    if let Error::Extraction { text } = e {
        body["text"] = json!(text);
    }
    if let Err(w) = write_file(path, crate::signal::to_pretty(&body)) {
        log::error!(target: "pipeline", "cannot write {}: {w}", path.display());
    }
    e.exit_code()
}

/// Problem workspace under the configured root, named after the problem
/// directory. Used before the problem itself is known to load.
fn problem_workspace(config: &RunConfig, problem_dir: &Path) -> Result<ProblemWorkspace> {
    let id = problem_dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .ok_or_else(|| Error::BadProblem(format!("{} has no directory name", problem_dir.display())))?;
    Workspace::new(&config.workspace)?.problem(&id)
}

fn fallback_error_path(config: &RunConfig) -> PathBuf {
    config.workspace.join("error.json")
}

pub fn cmd_gen_tb(problem_dir: &Path, config: &RunConfig, resume: bool) -> i32 {
    let started = Instant::now();
    let ws = match problem_workspace(config, problem_dir) {
        Ok(ws) => ws,
        Err(e) => return report_error(&fallback_error_path(config), &e),
    };
    let services = match Services::from_config(config) {
        Ok(s) => s,
        Err(e) => return report_error(&ws.error_json(), &e),
    };
    let gateway = services.gateway(Some(&ws));
    let result = Problem::load(problem_dir).and_then(|p| gen_tb(&services, &p, &gateway, &ws, resume));
    let code = match &result {
        Ok(tb) => {
            println!(
                "generated {} ({} scenarios, {} steps, aligned={})",
                ws.sim_main().display(),
                tb.suite.scenarios().len(),
                tb.suite.total_steps(),
                tb.aligned
            );
            let _ = std::fs::remove_file(ws.error_json());
            0
        }
        Err(e) => report_error(&ws.error_json(), e),
    };
    let _ = write_run_meta(ws.run_meta(), "gen-tb", config, &gateway, None, started, code);
    code
}

pub fn cmd_verify(problem_dir: &Path, dut: Option<&Path>, config: &RunConfig, full: bool) -> i32 {
    let started = Instant::now();
    let ws = match problem_workspace(config, problem_dir) {
        Ok(ws) => ws,
        Err(e) => return report_error(&fallback_error_path(config), &e),
    };
    let simulator = match simulator_from_config(config) {
        Ok(s) => s,
        Err(e) => return report_error(&ws.error_json(), &e),
    };
    let services = match Services::from_config(config) {
        Ok(s) => s,
        Err(e) => return report_error(&ws.error_json(), &e),
    };
    let gateway = services.gateway(Some(&ws));
    let result = (|| {
        let problem = Problem::load(problem_dir)?;
        let dut_source = match dut {
            Some(p) => std::fs::read_to_string(p).map_err(|e| Error::BadProblem(format!("{}: {e}", p.display())))?,
            None => problem.dut_source.clone().expect("loaded problems carry top.v"),
        };
        verify(&services, &problem, &dut_source, &gateway, &simulator, &ws, full)
    })();
    let code = match &result {
        Ok(v) => {
            if let Some(last) = v.history.last() {
                for d in &last.outcome.mismatches {
                    println!("{}", crate::codegen::mismatch_line(d));
                }
            }
            println!("{}", v.verdict_line());
            let _ = std::fs::remove_file(ws.error_json());
            if v.dut_status == DutStatus::Pass {
                0
            } else {
                1
            }
        }
        Err(e) => report_error(&ws.error_json(), e),
    };
    let _ = write_run_meta(ws.run_meta(), "verify", config, &gateway, Some(&simulator.version), started, code);
    code
}

pub fn cmd_eval(corpus: &Path, config: &RunConfig, alphas: &[u32], resume: bool) -> i32 {
    let out_dir = config.workspace.join("eval");
    let err_path = out_dir.join("error.json");
    let result = (|| {
        let records = eval::load_corpus(corpus)?;
        let simulator = simulator_from_config(config)?;
        let services = Services::from_config(config)?;
        let runner = PipelineRunner { services: &services, simulator: &simulator, resume };
        let opts = BenchOptions {
            alphas: alphas.to_vec(),
            workers: config.eval_workers,
            out_dir: out_dir.clone(),
            resume,
            cancel: Some(interrupted()),
        };
        eval::run_benchmark(&records, &runner, &simulator, &opts)
    })();
    match result {
        Ok(report) => {
            print!("{}", eval::render_report_table(&report));
            println!("report: {}", out_dir.join("eval_report.json").display());
            0
        }
        Err(e) => report_error(&err_path, &e),
    }
}

pub fn cmd_derive_verdicts(corpus: &Path, config: &RunConfig) -> i32 {
    let result = simulator_from_config(config).and_then(|sim| eval::derive_verdicts(corpus, &sim, config.eval_workers));
    match result {
        Ok(n) => {
            println!("wrote {n} verdict files");
            0
        }
        Err(e) => report_error(&fallback_error_path(config), &e),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FixtureMode {
    /// Call the live provider and runtime, recording every answer.
    Record,
    /// Replay only; any missing recording fails the check.
    Check,
}

/// Runs gen-tb and a verify per design in a scratch workspace, either
/// recording fixtures or checking that the recorded ones are complete.
/// `duts` defaults to the problem's own `top.v`.
pub fn cmd_fixtures(mode: FixtureMode, problem_dir: &Path, duts: &[PathBuf], config: &RunConfig) -> i32 {
    let mut cfg = config.clone();
    let (p, r) = match mode {
        FixtureMode::Record => (ProviderKind::Record, RuntimeKind::Record),
        FixtureMode::Check => (ProviderKind::Fixture, RuntimeKind::Fixture),
    };
    cfg.provider.kind = p;
    cfg.runtime.kind = r;
    let scratch = match tempfile::tempdir() {
        Ok(d) => d,
        Err(e) => return report_error(&fallback_error_path(config), &Error::io(std::env::temp_dir(), e)),
    };
    cfg.workspace = scratch.path().to_path_buf();
    let result = (|| {
        let problem = Problem::load(problem_dir)?;
        let services = Services::from_config(&cfg)?;
        let ws = Workspace::new(&cfg.workspace)?.problem(&problem.id)?;
        let gateway = services.gateway(None);
        gen_tb(&services, &problem, &gateway, &ws, false)?;
        let simulator = simulator_from_config(&cfg)?;
        let mut designs: Vec<(String, String)> = Vec::new();
        if duts.is_empty() {
            designs.push(("top.v".into(), problem.dut_source.clone().unwrap_or_default()));
        }
        for d in duts {
            designs.push((d.display().to_string(), std::fs::read_to_string(d).map_err(|e| Error::io(d, e))?));
        }
        let mut lines = Vec::new();
        for (i, (name, src)) in designs.iter().enumerate() {
            // a fresh copy of the generated testbench per design, so one
            // design's refinements never leak into the next
            let dws = Workspace::new(cfg.workspace.join(format!("dut{i}")))?.problem(&problem.id)?;
            copy_dir(ws.dir(), dws.dir())?;
            let v = verify(&services, &problem, src, &gateway, &simulator, &dws, false)?;
            lines.push(format!("{name}: {}", v.verdict_line()));
        }
        Ok::<_, Error>((lines, gateway.ledger()))
    })();
    match result {
        Ok((lines, ledger)) => {
            for l in lines {
                println!("{l}");
            }
            print!("{}", crate::llm::render_ledger_table(&ledger_report(&ledger)));
            println!("fixtures: {}", if mode == FixtureMode::Record { "recorded" } else { "complete" });
            0
        }
        Err(e) => report_error(&fallback_error_path(config), &e),
    }
}

fn copy_dir(from: &Path, to: &Path) -> Result<()> {
    std::fs::create_dir_all(to).map_err(|e| Error::io(to, e))?;
    for entry in std::fs::read_dir(from).map_err(|e| Error::io(from, e))? {
        let entry = entry.map_err(|e| Error::io(from, e))?;
        let target = to.join(entry.file_name());
        if entry.path().is_dir() {
            copy_dir(&entry.path(), &target)?;
        } else {
            std::fs::copy(entry.path(), &target).map_err(|e| Error::io(&target, e))?;
        }
    }
    Ok(())
}

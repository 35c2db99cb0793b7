// SPDX-License-Identifier: Apache-2.0

//! Execution of generated stimulus and emulator scripts.
//!
//! The scripting-side harness ("tails") speaks a small process protocol:
//!
//! ```text
//! <interpreter> <tail_dir>/stimulus_tail.py <script> <out>
//! <interpreter> <tail_dir>/emulator_tail.py <script> <in> <out>
//! ```
//!
//! Exit code 0 means the output file is valid; 10 means the script returned a
//! malformed value, 11 that the entry point is missing, 12 that the script
//! raised. Only the exit code is interpreted, never stderr text.

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Duration;

use crate::error::{Error, Result};
use crate::process::run_with_timeout;
use crate::signal::{stimulus_to_json, RawScenario, RawTrace, StimulusSuite};
use crate::util::{read_file, sha256_hex, write_file};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureKind {
    /// Exit 10.
    BadReturn,
    /// Exit 11.
    MissingEntryPoint,
    /// Exit 12.
    Exception,
    Timeout,
    /// Any other exit status, or a signal.
    Crash,
    /// The script ran but its output does not fit the interface.
    InvalidOutput,
}

/// A per-script failure. Unlike [`Error`], it never aborts a pipeline stage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecutionFailure {
    pub kind: FailureKind,
    pub message: String,
}

impl ExecutionFailure {
    pub fn new(kind: FailureKind, message: impl Into<String>) -> Self {
        Self { kind, message: message.into() }
    }
}

impl fmt::Display for ExecutionFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}: {}", self.kind, self.message)
    }
}

pub type Execution<T> = std::result::Result<T, ExecutionFailure>;

/// Runs generated scripts. The outer `Result` reports an unusable backend,
/// the inner one a failure of this particular script.
pub trait Backend: Send + Sync {
    fn run_stimulus(&self, script: &str) -> Result<Execution<Vec<RawScenario>>>;

    fn run_emulator(&self, script: &str, suite: &StimulusSuite) -> Result<Execution<Vec<RawTrace>>>;
}

#[derive(Debug, Clone)]
pub struct PythonBackend {
    pub interpreter: PathBuf,
    pub tail_dir: PathBuf,
    pub stimulus_timeout: Duration,
    pub candidate_timeout: Duration,
}

impl PythonBackend {
    pub fn new(interpreter: impl Into<PathBuf>, tail_dir: impl Into<PathBuf>) -> Self {
        Self {
            interpreter: interpreter.into(),
            tail_dir: tail_dir.into(),
            stimulus_timeout: Duration::from_secs(30),
            candidate_timeout: Duration::from_secs(30),
        }
    }

    fn tail(&self, name: &str) -> Result<PathBuf> {
        let path = self.tail_dir.join(name);
        if !path.is_file() {
            return Err(Error::Backend(format!("runtime tail {} not found", path.display())));
        }
        Ok(path)
    }

    fn invoke(&self, tail: &Path, args: &[&Path], scratch: &Path, timeout: Duration) -> Result<Execution<()>> {
        let mut cmd = Command::new(&self.interpreter);
        cmd.arg(tail).args(args).current_dir(scratch);
        let out = run_with_timeout(&mut cmd, timeout).map_err(|e| {
            Error::Backend(format!("cannot start interpreter {}: {e}", self.interpreter.display()))
        })?;
        let stderr = out.stderr.trim().to_string();
        let result = match out.code() {
            Some(0) => Ok(()),
            Some(10) => Err(ExecutionFailure::new(FailureKind::BadReturn, stderr)),
            Some(11) => Err(ExecutionFailure::new(FailureKind::MissingEntryPoint, stderr)),
            Some(12) => Err(ExecutionFailure::new(FailureKind::Exception, stderr)),
            _ if out.timed_out() => Err(ExecutionFailure::new(
                FailureKind::Timeout,
                format!("no result after {} s", timeout.as_secs_f64()),
            )),
            code => Err(ExecutionFailure::new(FailureKind::Crash, format!("exit status {code:?}: {stderr}"))),
        };
        Ok(result)
    }

    fn read_output<T: serde::de::DeserializeOwned>(path: &Path) -> Execution<T> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ExecutionFailure::new(FailureKind::InvalidOutput, format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| ExecutionFailure::new(FailureKind::InvalidOutput, e.to_string()))
    }
}

impl Backend for PythonBackend {
    fn run_stimulus(&self, script: &str) -> Result<Execution<Vec<RawScenario>>> {
        let tail = self.tail("stimulus_tail.py")?;
        let scratch = tempfile::tempdir().map_err(|e| Error::io(std::env::temp_dir(), e))?;
        let script_path = scratch.path().join("Stimuli_Gen.py");
        let out_path = scratch.path().join("Input_signal.json");
        write_file(&script_path, script)?;
        Ok(self
            .invoke(&tail, &[&script_path, &out_path], scratch.path(), self.stimulus_timeout)?
            .and_then(|()| Self::read_output(&out_path)))
    }

    fn run_emulator(&self, script: &str, suite: &StimulusSuite) -> Result<Execution<Vec<RawTrace>>> {
        let tail = self.tail("emulator_tail.py")?;
        let scratch = tempfile::tempdir().map_err(|e| Error::io(std::env::temp_dir(), e))?;
        let script_path = scratch.path().join("Func_candidate.py");
        let in_path = scratch.path().join("Input_signal.json");
        let out_path = scratch.path().join("Reference_signal_candidate.json");
        write_file(&script_path, script)?;
        write_file(&in_path, stimulus_to_json(suite))?;
        Ok(self
            .invoke(&tail, &[&script_path, &in_path, &out_path], scratch.path(), self.candidate_timeout)?
            .and_then(|()| Self::read_output(&out_path)))
    }
}

/// Replays script results from `<dir>/<sha256(script)>.json`; a recorded
/// failure lives in `<dir>/<sha256(script)>.error.txt`.
#[derive(Debug, Clone)]
pub struct FixtureBackend {
    dir: PathBuf,
}

impl FixtureBackend {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    fn lookup<T: serde::de::DeserializeOwned>(&self, script: &str) -> Result<Execution<T>> {
        let key = sha256_hex(script);
        let ok = self.dir.join(format!("{key}.json"));
        if ok.is_file() {
            return Ok(Ok(serde_json::from_str(&read_file(&ok)?)?));
        }
        let failed = self.dir.join(format!("{key}.error.txt"));
        if failed.is_file() {
            return Ok(Err(ExecutionFailure::new(FailureKind::Exception, read_file(&failed)?)));
        }
        Err(Error::Backend(format!("runtime fixture miss for script {key}")))
    }

    pub fn record<T: serde::Serialize>(dir: &Path, script: &str, result: &Execution<T>) -> Result<()> {
        let key = sha256_hex(script);
        match result {
            Ok(value) => write_file(&dir.join(format!("{key}.json")), crate::signal::to_pretty(value)),
            Err(f) => write_file(&dir.join(format!("{key}.error.txt")), &f.message),
        }
    }
}

impl Backend for FixtureBackend {
    fn run_stimulus(&self, script: &str) -> Result<Execution<Vec<RawScenario>>> {
        self.lookup(script)
    }

    fn run_emulator(&self, script: &str, _suite: &StimulusSuite) -> Result<Execution<Vec<RawTrace>>> {
        self.lookup(script)
    }
}

/// Wraps another backend and stores every result as a fixture.
pub struct RecordingBackend<B> {
    inner: B,
    dir: PathBuf,
}

impl<B: Backend> RecordingBackend<B> {
    pub fn new(inner: B, dir: impl Into<PathBuf>) -> Self {
        Self { inner, dir: dir.into() }
    }
}

impl<B: Backend> Backend for RecordingBackend<B> {
    fn run_stimulus(&self, script: &str) -> Result<Execution<Vec<RawScenario>>> {
        let r = self.inner.run_stimulus(script)?;
        FixtureBackend::record(&self.dir, script, &r)?;
        Ok(r)
    }

    fn run_emulator(&self, script: &str, suite: &StimulusSuite) -> Result<Execution<Vec<RawTrace>>> {
        let r = self.inner.run_emulator(script, suite)?;
        FixtureBackend::record(&self.dir, script, &r)?;
        Ok(r)
    }
}

type StimulusFn = dyn Fn(&str) -> Execution<Vec<RawScenario>> + Send + Sync;
type EmulatorFn = dyn Fn(&str, &StimulusSuite) -> Execution<Vec<RawTrace>> + Send + Sync;

/// Backend made of two closures; lets Rust code stand in for the scripting side.
pub struct FnBackend {
    stimulus: Box<StimulusFn>,
    emulator: Box<EmulatorFn>,
}

impl FnBackend {
    pub fn new(
        stimulus: impl Fn(&str) -> Execution<Vec<RawScenario>> + Send + Sync + 'static,
        emulator: impl Fn(&str, &StimulusSuite) -> Execution<Vec<RawTrace>> + Send + Sync + 'static,
    ) -> Self {
        Self { stimulus: Box::new(stimulus), emulator: Box::new(emulator) }
    }
}

impl Backend for FnBackend {
    fn run_stimulus(&self, script: &str) -> Result<Execution<Vec<RawScenario>>> {
        Ok((self.stimulus)(script))
    }

    fn run_emulator(&self, script: &str, suite: &StimulusSuite) -> Result<Execution<Vec<RawTrace>>> {
        Ok((self.emulator)(script, suite))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{ModuleInterface, PortDecl};

    // Stand-in tails: they ignore the script and follow the exit-code protocol
    // according to a keyword found in it.
    const STUB_STIMULUS_TAIL: &str = r#"
import json, sys, time
src = open(sys.argv[1]).read()
if "MISSING" in src: sys.exit(11)
if "BADRET" in src: sys.exit(10)
if "RAISE" in src:
    sys.stderr.write("Traceback: boom\n"); sys.exit(12)
if "HANG" in src: time.sleep(30)
if "SEGV" in src: sys.exit(139)
json.dump([{"scenario": "a", "steps": [{"x": "1"}]}], open(sys.argv[2], "w"))
"#;

    const STUB_EMULATOR_TAIL: &str = r#"
import json, sys
scen = json.load(open(sys.argv[2]))
out = [{"scenario": s["scenario"], "steps": [{"inputs": st, "outputs": {"y": st["x"]}} for st in s["steps"]]} for s in scen]
json.dump(out, open(sys.argv[3], "w"))
"#;

    fn backend() -> (tempfile::TempDir, PythonBackend) {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("stimulus_tail.py"), STUB_STIMULUS_TAIL).unwrap();
        std::fs::write(dir.path().join("emulator_tail.py"), STUB_EMULATOR_TAIL).unwrap();
        let mut b = PythonBackend::new("python3", dir.path());
        b.stimulus_timeout = Duration::from_millis(1500);
        (dir, b)
    }

    fn python_available() -> bool {
        Command::new("python3").arg("--version").output().is_ok()
    }

    #[test]
    fn exit_code_taxonomy() {
        if !python_available() {
            eprintln!("python3 not found; skipping");
            return;
        }
        let (_d, b) = backend();
        let ok = b.run_stimulus("def generate_scenarios(): ...").unwrap().unwrap();
        assert_eq!(ok[0].scenario, "a");
        let kind = |s: &str| b.run_stimulus(s).unwrap().unwrap_err().kind;
        assert_eq!(kind("MISSING"), FailureKind::MissingEntryPoint);
        assert_eq!(kind("BADRET"), FailureKind::BadReturn);
        assert_eq!(kind("SEGV"), FailureKind::Crash);
        assert_eq!(kind("HANG"), FailureKind::Timeout);
        let raised = b.run_stimulus("RAISE").unwrap().unwrap_err();
        assert_eq!(raised.kind, FailureKind::Exception);
        assert!(raised.message.contains("boom"));
    }

    #[test]
    fn emulator_round_trip_through_files() {
        if !python_available() {
            return;
        }
        let (_d, b) = backend();
        let iface = ModuleInterface::new("m", vec![PortDecl::input("x", 1), PortDecl::output("y", 1)]).unwrap();
        let suite = crate::signal::stimulus_from_json(r#"[{"scenario":"a","steps":[{"x":"1"},{"x":"0"}]}]"#, &iface).unwrap();
        let traces = b.run_emulator("class Python_DUT: ...", &suite).unwrap().unwrap();
        assert_eq!(traces[0].steps[1].outputs["y"], "0");
    }

    #[test]
    fn missing_tail_is_backend_error() {
        let b = PythonBackend::new("python3", "/nonexistent/tails");
        assert!(matches!(b.run_stimulus("x"), Err(Error::Backend(_))));
        let b = PythonBackend::new("/nonexistent/python", std::env::temp_dir());
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("stimulus_tail.py"), "").unwrap();
        let b = PythonBackend { tail_dir: dir.path().into(), ..b };
        assert!(matches!(b.run_stimulus("x"), Err(Error::Backend(_))));
    }

    #[test]
    fn fixture_record_and_replay() {
        let dir = tempfile::tempdir().unwrap();
        let raw = vec![RawScenario { scenario: "s".into(), steps: vec![] }];
        FixtureBackend::record(dir.path(), "script-a", &Ok(raw.clone())).unwrap();
        FixtureBackend::record::<Vec<RawScenario>>(
            dir.path(),
            "script-b",
            &Err(ExecutionFailure::new(FailureKind::Exception, "boom")),
        )
        .unwrap();
        let fx = FixtureBackend::new(dir.path());
        assert_eq!(fx.run_stimulus("script-a").unwrap().unwrap(), raw);
        assert_eq!(fx.run_stimulus("script-b").unwrap().unwrap_err().message, "boom");
        assert!(matches!(fx.run_stimulus("script-c"), Err(Error::Backend(_))));
    }
}

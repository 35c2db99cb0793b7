// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Position inside a Verilog source text (1-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SourceLoc {
    pub line: usize,
    pub column: usize,
}

impl std::fmt::Display for SourceLoc {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("width error: expected {expected} bits, got {actual}")]
    Width { expected: usize, actual: usize },

    #[error("format error: {0}")]
    Format(String),

    #[error("parse error at {loc}: {message}")]
    Parse { loc: SourceLoc, message: String },

    #[error("structure error: {0}")]
    Structure(String),

    #[error("invalid value: {0}")]
    Invalid(String),

    #[error("provider error: {0}")]
    Provider(String),

    #[error("fixture miss: no recorded completion {key}.{sample_index}")]
    FixtureMiss { key: String, sample_index: usize },

    #[error("no fenced code block in completion")]
    Extraction { text: String },

    #[error("stimulus generation failed: {0}")]
    StimulusGen(String),

    #[error("emulator generation failed: {0}")]
    EmulatorGen(String),

    #[error("execution backend error: {0}")]
    Backend(String),

    #[error("all candidates failed: {0}")]
    AllCandidatesFailed(String),

    #[error("codegen error: {0}")]
    Codegen(String),

    #[error("ambiguous clock: ports {0:?} all look like clocks")]
    AmbiguousClock(Vec<String>),

    #[error("environment error: {0}")]
    Environment(String),

    #[error("simulation build failed")]
    Build { log: String },

    #[error("simulation timed out after {0} s")]
    SimTimeout(u64),

    #[error("simulator protocol error: {0}")]
    Protocol(String),

    #[error("evaluation input error: {0}")]
    EvalInput(String),

    #[error("bad problem: {0}")]
    BadProblem(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("interrupted")]
    Interrupted,

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Stable machine-readable name, used in `error.json`.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Width { .. } => "WidthError",
            Error::Format(_) => "FormatError",
            Error::Parse { .. } => "ParseError",
            Error::Structure(_) => "StructureError",
            Error::Invalid(_) => "InvalidValue",
            Error::Provider(_) => "ProviderError",
            Error::FixtureMiss { .. } => "FixtureMissError",
            Error::Extraction { .. } => "ExtractionError",
            Error::StimulusGen(_) => "StimulusGenError",
            Error::EmulatorGen(_) => "EmulatorGenError",
            Error::Backend(_) => "BackendError",
            Error::AllCandidatesFailed(_) => "AllCandidatesFailedError",
            Error::Codegen(_) => "CodegenError",
            Error::AmbiguousClock(_) => "AmbiguousClockError",
            Error::Environment(_) => "EnvironmentError",
            Error::Build { .. } => "BuildError",
            Error::SimTimeout(_) => "SimTimeoutError",
            Error::Protocol(_) => "ProtocolError",
            Error::EvalInput(_) => "EvalInputError",
            Error::BadProblem(_) => "BadProblem",
            Error::Config(_) => "ConfigError",
            Error::Interrupted => "Interrupted",
            Error::Io { .. } => "IoError",
            Error::Json(_) => "JsonError",
        }
    }

    /// Process exit code for the CLI: 2 bad input, 3 environment, 4 provider.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Environment(_) => 3,
            Error::Provider(_) | Error::FixtureMiss { .. } => 4,
            _ => 2,
        }
    }
}

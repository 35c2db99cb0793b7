// SPDX-License-Identifier: Apache-2.0

//! Chat-completion access: providers, deterministic fixture replay, code
//! extraction and the per-stage token ledger.

mod extract;
mod fixture;
mod ledger;
mod remote;

use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

pub use extract::extract_code_block;
pub use fixture::{FixtureProvider, RecordingProvider, ScriptedProvider};
pub use ledger::{ledger_report, render_ledger_table, LedgerRow, Stage, StageUsage, TokenLedger};
pub use remote::{RemoteConfig, RemoteProvider};

use crate::error::{Error, Result};
use crate::util::{parallel_map, sha256_hex, write_file};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingParams {
    pub temperature: f64,
    pub n_samples: usize,
    pub max_tokens: u32,
}

impl SamplingParams {
    pub fn new(temperature: f64, n_samples: usize) -> Self {
        Self { temperature, n_samples, max_tokens: 4096 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.temperature >= 0.0) {
            return Err(Error::Invalid(format!("temperature {} must be >= 0", self.temperature)));
        }
        if self.n_samples == 0 {
            return Err(Error::Invalid("n_samples must be >= 1".into()));
        }
        if self.max_tokens == 0 {
            return Err(Error::Invalid("max_tokens must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub system: String,
    pub user: String,
    pub few_shots: Vec<(String, String)>,
}

impl PromptBundle {
    pub fn new(system: impl Into<String>, user: impl Into<String>) -> Self {
        Self { system: system.into(), user: user.into(), few_shots: Vec::new() }
    }

    pub fn with_few_shots(mut self, shots: Vec<(String, String)>) -> Self {
        self.few_shots = shots;
        self
    }

    /// Stable content hash used to name fixture files.
    pub fn key(&self) -> String {
        let canonical = serde_json::json!({
            "few_shots": self.few_shots,
            "system": self.system,
            "user": self.user,
        });
        sha256_hex(canonical.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Completion {
    pub text: String,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

impl Completion {
    pub fn new(text: impl Into<String>, prompt_tokens: u64, completion_tokens: u64) -> Self {
        Self { text: text.into(), prompt_tokens, completion_tokens }
    }
}

/// A source of single completions. `sample_index` distinguishes the
/// independent samples of one request.
pub trait Provider: Send + Sync {
    fn sample(&self, prompt: &PromptBundle, params: &SamplingParams, sample_index: usize) -> Result<Completion>;

    fn name(&self) -> &str;
}

/// Provider handle plus token accounting and transcript persistence.
pub struct Gateway {
    provider: Arc<dyn Provider>,
    ledger: Mutex<TokenLedger>,
    transcript_dir: Option<PathBuf>,
    seq: AtomicU64,
}

impl Gateway {
    pub fn new(provider: Arc<dyn Provider>) -> Self {
        Self { provider, ledger: Mutex::new(TokenLedger::new()), transcript_dir: None, seq: AtomicU64::new(0) }
    }

    /// Persist every prompt/completion pair under `dir`.
    pub fn with_transcripts(mut self, dir: impl Into<PathBuf>) -> Self {
        self.transcript_dir = Some(dir.into());
        self
    }

    pub fn provider_name(&self) -> &str {
        self.provider.name()
    }

    pub fn ledger(&self) -> TokenLedger {
        self.ledger.lock().unwrap().clone()
    }

    /// `params.n_samples` independent completions, in sample order.
    pub fn complete(&self, prompt: &PromptBundle, params: &SamplingParams, stage: Stage) -> Result<Vec<Completion>> {
        let indices: Vec<usize> = (0..params.n_samples).collect();
        self.complete_indices(prompt, params, stage, &indices)
    }

    /// Like [`Gateway::complete`] but for an explicit list of sample indices.
    pub fn complete_indices(
        &self,
        prompt: &PromptBundle,
        params: &SamplingParams,
        stage: Stage,
        indices: &[usize],
    ) -> Result<Vec<Completion>> {
        params.validate()?;
        if prompt.user.trim().is_empty() {
            return Err(Error::Invalid("prompt user message is empty".into()));
        }
        let results = parallel_map(indices, indices.len(), |_, &idx| {
            let c = self.provider.sample(prompt, params, idx)?;
            self.ledger.lock().unwrap().add(stage, c.prompt_tokens, c.completion_tokens);
            self.persist(prompt, params, stage, idx, &c)?;
            Ok(c)
        });
        results.into_iter().collect()
    }

    fn persist(
        &self,
        prompt: &PromptBundle,
        params: &SamplingParams,
        stage: Stage,
        sample_index: usize,
        completion: &Completion,
    ) -> Result<()> {
        let Some(dir) = &self.transcript_dir else {
            return Ok(());
        };
        let seq = self.seq.fetch_add(1, Ordering::SeqCst);
        let record = serde_json::json!({
            "stage": stage,
            "prompt_key": prompt.key(),
            "sample_index": sample_index,
            "params": params,
            "prompt": prompt,
            "completion": completion,
        });
        let path = dir.join(format!("{seq:05}_{stage}_{sample_index}.json"));
        log::debug!(target: "llm", "transcript {}", path.display());
        write_file(&path, crate::signal::to_pretty(&record))
    }
}

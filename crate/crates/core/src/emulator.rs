// SPDX-License-Identifier: Apache-2.0

//! Emulator agent: sample functional-model candidates and run them over the
//! stimulus suite to get one reference trace set per candidate.

use crate::error::{Error, Result};
use crate::llm::{extract_code_block, Gateway, PromptBundle, SamplingParams, Stage};
use crate::problem::Problem;
use crate::prompts;
use crate::runtime::{Backend, Execution, ExecutionFailure, FailureKind};
use crate::signal::{traceset_from_raw, StimulusSuite, TraceSet};
use crate::util::parallel_map;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmulatorScript {
    pub source: String,
    pub candidate_index: usize,
    /// 0 for the initial sample, +1 per refinement.
    pub generation: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet {
    pub candidates: Vec<EmulatorScript>,
    /// Sampling used to create the set; `n_samples` is the requested size.
    pub params: SamplingParams,
}

impl CandidateSet {
    pub fn get(&self, index: usize) -> Option<&EmulatorScript> {
        self.candidates.iter().find(|c| c.candidate_index == index)
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }
}

/// Outcome of running one candidate over the whole suite.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateRun {
    pub index: usize,
    pub outcome: Execution<TraceSet>,
}

/// True when the source declares the runtime-contract class and its step method.
pub fn satisfies_contract(source: &str) -> bool {
    source.contains("class Python_DUT") && source.contains("def load")
}

fn usable(text: &str) -> Option<String> {
    extract_code_block(text, "python").ok().filter(|s| satisfies_contract(s))
}

/// Samples `params.n_samples` candidates from `prompt`. A sample without a
/// usable model is re-drawn once (at sample index `n + i`) and then dropped.
/// Surviving candidates are numbered densely from 0.
pub(crate) fn sample_candidates(
    prompt: &PromptBundle,
    params: SamplingParams,
    stage: Stage,
    generation: usize,
    gateway: &Gateway,
) -> Result<CandidateSet> {
    let n = params.n_samples;
    let first = gateway.complete(prompt, &params, stage)?;
    let mut sources: Vec<Option<String>> = first.iter().map(|c| usable(&c.text)).collect();

    let retry: Vec<usize> = (0..n).filter(|&i| sources[i].is_none()).map(|i| n + i).collect();
    if !retry.is_empty() {
        log::warn!(target: stage.as_str(), "{} of {n} samples unusable; re-drawing once", retry.len());
        let again = gateway.complete_indices(prompt, &params, stage, &retry)?;
        for (idx, c) in retry.iter().zip(again) {
            sources[idx - n] = usable(&c.text);
        }
    }

    let candidates: Vec<EmulatorScript> = sources
        .into_iter()
        .flatten()
        .enumerate()
        .map(|(i, source)| EmulatorScript { source, candidate_index: i, generation })
        .collect();
    if candidates.is_empty() {
        return Err(Error::EmulatorGen(format!("no usable functional model among {n} samples")));
    }
    Ok(CandidateSet { candidates, params })
}

pub fn generate_emulators(problem: &Problem, n: usize, temperature: f64, gateway: &Gateway) -> Result<CandidateSet> {
    if n == 0 {
        return Err(Error::Invalid("candidate count must be >= 1".into()));
    }
    problem.validate()?;
    let prompt = prompts::emulator_prompt(problem);
    sample_candidates(&prompt, SamplingParams::new(temperature, n), Stage::Emulator, 0, gateway)
}

/// Runs every candidate over `suite`, at most `workers` at a time. Results
/// are in candidate order; a script failure is recorded, not raised.
pub fn run_candidates(
    set: &CandidateSet,
    suite: &StimulusSuite,
    backend: &dyn Backend,
    workers: usize,
) -> Result<Vec<CandidateRun>> {
    if suite.is_empty() {
        return Err(Error::Invalid("stimulus suite is empty".into()));
    }
    let runs = parallel_map(&set.candidates, workers, |_, cand| -> Result<CandidateRun> {
        let outcome = backend.run_emulator(&cand.source, suite)?.and_then(|raw| {
            let ts = traceset_from_raw(&raw, suite.interface())
                .and_then(|ts| ts.check_against(suite).map(|()| ts))
                .map_err(|e| ExecutionFailure::new(FailureKind::InvalidOutput, e.to_string()))?;
            Ok(ts)
        });
        if let Err(f) = &outcome {
            log::warn!(target: "emulator", "candidate {} failed: {f}", cand.candidate_index);
        }
        Ok(CandidateRun { index: cand.candidate_index, outcome })
    });
    runs.into_iter().collect()
}

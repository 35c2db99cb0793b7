// SPDX-License-Identifier: Apache-2.0

//! Self-improvement loop: classify candidate traces by consensus, let a judge
//! pick the best candidate, refine it, repeat.
//!
//! Per round:
//!
//! 1. run all N candidates over the stimulus suite;
//! 2. classify the successful trace sets: all equal (consistent), all equal
//!    but one (outlier filtered, needs at least three), or no majority;
//! 3. ask the judge for the best live candidate and whether it is aligned
//!    with the specification;
//! 4. stop when aligned, otherwise sample N refinements of the chosen
//!    candidate and go again, for at most `max_iterations` rounds.

use serde::Serialize;

use crate::emulator::{generate_emulators, run_candidates, sample_candidates, CandidateRun, CandidateSet, EmulatorScript};
use crate::error::{Error, Result};
use crate::llm::{extract_code_block, Gateway, PromptBundle, SamplingParams, Stage};
use crate::problem::Problem;
use crate::prompts::{self, JudgeMaterial};
use crate::runtime::Backend;
use crate::signal::{traces_equal, traceset_to_json, StimulusSuite, TraceSet};
use crate::workspace::ProblemWorkspace;

#[derive(Debug, Clone, PartialEq)]
pub enum ConsensusClass {
    Consistent { representative: TraceSet },
    OutlierFiltered { outlier_index: usize, evidence: Vec<TraceSet> },
    NoMajority { evidence: Vec<TraceSet> },
}

impl ConsensusClass {
    pub fn tag(&self) -> &'static str {
        match self {
            ConsensusClass::Consistent { .. } => "consistent",
            ConsensusClass::OutlierFiltered { .. } => "outlier_filtered",
            ConsensusClass::NoMajority { .. } => "no_majority",
        }
    }
}

/// Successful runs grouped by identical outputs, in first-appearance order.
fn group_runs(runs: &[CandidateRun]) -> Vec<(Vec<usize>, &TraceSet)> {
    let mut groups: Vec<(Vec<usize>, &TraceSet)> = Vec::new();
    for run in runs {
        let Ok(ts) = &run.outcome else { continue };
        match groups.iter_mut().find(|(_, rep)| traces_equal(rep, ts)) {
            Some((members, _)) => members.push(run.index),
            None => groups.push((vec![run.index], ts)),
        }
    }
    groups
}

/// Failed runs are dropped first; the case split applies to what remains.
pub fn classify_tracesets(runs: &[CandidateRun]) -> Result<ConsensusClass> {
    let successes = runs.iter().filter(|r| r.outcome.is_ok()).count();
    if successes == 0 {
        let why: Vec<String> = runs
            .iter()
            .filter_map(|r| r.outcome.as_ref().err().map(|f| format!("candidate {}: {f}", r.index)))
            .collect();
        return Err(Error::AllCandidatesFailed(why.join("; ")));
    }
    let groups = group_runs(runs);
    if groups.len() == 1 {
        return Ok(ConsensusClass::Consistent { representative: groups[0].1.clone() });
    }
    if successes >= 3 && groups.len() == 2 {
        if let Some((outlier, _)) = groups.iter().find(|(m, _)| m.len() == 1) {
            let outlier_index = outlier[0];
            let evidence = runs
                .iter()
                .filter(|r| r.index != outlier_index)
                .filter_map(|r| r.outcome.as_ref().ok().cloned())
                .collect();
            return Ok(ConsensusClass::OutlierFiltered { outlier_index, evidence });
        }
    }
    Ok(ConsensusClass::NoMajority { evidence: groups.into_iter().map(|(_, ts)| ts.clone()).collect() })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct JudgeSelection {
    pub best_index: usize,
    pub aligned: bool,
    pub analysis: String,
    /// Set when the judge never produced a usable reply and the lowest live
    /// candidate was chosen instead.
    pub fallback: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImproveConfig {
    /// Maximum judge rounds.
    pub max_iterations: usize,
    pub n_samples: usize,
    pub temperature: f64,
    pub judge_temperature: f64,
    pub workers: usize,
}

impl Default for ImproveConfig {
    fn default() -> Self {
        Self { max_iterations: 3, n_samples: 5, temperature: 0.3, judge_temperature: 0.0, workers: 4 }
    }
}

fn consensus_summary(c: &ConsensusClass, runs: &[CandidateRun]) -> String {
    let failed: Vec<String> = runs.iter().filter(|r| r.outcome.is_err()).map(|r| r.index.to_string()).collect();
    let mut s = match c {
        ConsensusClass::Consistent { .. } => "All live candidates produced identical waveforms.".to_string(),
        ConsensusClass::OutlierFiltered { outlier_index, .. } => format!(
            "All live candidates agree except candidate {outlier_index}, whose waveform differs and is not shown."
        ),
        ConsensusClass::NoMajority { evidence } => {
            format!("The live candidates disagree; {} distinct waveforms are shown.", evidence.len())
        }
    };
    if !failed.is_empty() {
        s.push_str(&format!(" Candidates {} failed to execute.", failed.join(", ")));
    }
    s
}

/// Builds the judge's view of a round: all candidate sources and the
/// consensus evidence, each waveform labelled with the candidates behind it.
pub fn judge_material<'a>(
    consensus: &'a ConsensusClass,
    runs: &'a [CandidateRun],
    problem: &'a Problem,
    set: &'a CandidateSet,
) -> JudgeMaterial<'a> {
    let candidates = set
        .candidates
        .iter()
        .map(|c| {
            let err = runs
                .iter()
                .find(|r| r.index == c.candidate_index)
                .and_then(|r| r.outcome.as_ref().err().map(|f| f.to_string()));
            (c.candidate_index, c.source.as_str(), err)
        })
        .collect();
    let groups = group_runs(runs);
    let members_of = |ts: &TraceSet| -> Vec<usize> {
        groups
            .iter()
            .find(|(_, rep)| traces_equal(rep, ts))
            .map(|(m, _)| m.clone())
            .unwrap_or_default()
    };
    let evidence = match consensus {
        ConsensusClass::Consistent { representative } => vec![(members_of(representative), representative)],
        ConsensusClass::OutlierFiltered { outlier_index, evidence } => {
            let members: Vec<usize> = members_of(&evidence[0]).into_iter().filter(|i| i != outlier_index).collect();
            vec![(members, &evidence[0])]
        }
        ConsensusClass::NoMajority { evidence } => evidence.iter().map(|ts| (members_of(ts), ts)).collect(),
    };
    JudgeMaterial { problem, candidates, consensus: consensus_summary(consensus, runs), evidence }
}

#[derive(serde::Deserialize)]
struct JudgeReply {
    best: usize,
    aligned: bool,
    #[serde(default)]
    analysis: String,
}

fn parse_judge_reply(text: &str, live: &[usize]) -> std::result::Result<JudgeReply, String> {
    let body = extract_code_block(text, "json").map_err(|_| "no fenced json block".to_string())?;
    let reply: JudgeReply = serde_json::from_str(&body).map_err(|e| format!("invalid JSON ({e})"))?;
    if !live.contains(&reply.best) {
        return Err(format!("best={} is not one of the live candidates {live:?}", reply.best));
    }
    Ok(reply)
}

pub fn judge_select(
    consensus: &ConsensusClass,
    runs: &[CandidateRun],
    problem: &Problem,
    set: &CandidateSet,
    temperature: f64,
    gateway: &Gateway,
) -> Result<JudgeSelection> {
    let live: Vec<usize> = runs.iter().filter(|r| r.outcome.is_ok()).map(|r| r.index).collect();
    if live.is_empty() {
        return Err(Error::AllCandidatesFailed("no live candidate to judge".into()));
    }
    let material = judge_material(consensus, runs, problem, set);
    let prompt = prompts::judge_prompt(&material);
    let params = SamplingParams::new(temperature, 1);

    let first = ask(gateway, &prompt, &params)?;
    let complaint = match parse_judge_reply(&first, &live) {
        Ok(r) => return Ok(JudgeSelection { best_index: r.best, aligned: r.aligned, analysis: r.analysis, fallback: false }),
        Err(e) => e,
    };
    log::warn!(target: "self_improve", "judge reply unusable ({complaint}); asking again");
    let second = ask(gateway, &prompts::reask(&prompt, &complaint), &params)?;
    match parse_judge_reply(&second, &live) {
        Ok(r) => Ok(JudgeSelection { best_index: r.best, aligned: r.aligned, analysis: r.analysis, fallback: false }),
        Err(e) => {
            log::error!(target: "self_improve", "JudgeParseError: {e}; falling back to candidate {}", live[0]);
            Ok(JudgeSelection {
                best_index: live[0],
                aligned: false,
                analysis: format!("judge reply unusable: {e}"),
                fallback: true,
            })
        }
    }
}

fn ask(gateway: &Gateway, prompt: &PromptBundle, params: &SamplingParams) -> Result<String> {
    Ok(gateway.complete(prompt, params, Stage::SelfImprove)?.remove(0).text)
}

/// Samples `n` rewrites of `selected`, one generation later.
pub fn refine(
    selected: &EmulatorScript,
    selection: &JudgeSelection,
    material: &JudgeMaterial<'_>,
    n: usize,
    temperature: f64,
    stage: Stage,
    gateway: &Gateway,
) -> Result<CandidateSet> {
    if n == 0 {
        return Err(Error::Invalid("refinement sample count must be >= 1".into()));
    }
    let prompt = prompts::refine_prompt(material, selected.candidate_index, &selected.source, &selection.analysis);
    sample_candidates(&prompt, SamplingParams::new(temperature, n), stage, selected.generation + 1, gateway)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImproveOutcome {
    pub model: EmulatorScript,
    pub traces: TraceSet,
    pub aligned: bool,
    pub rounds: usize,
    pub judge_calls: usize,
    pub refine_calls: usize,
}

#[derive(Serialize)]
struct RoundRecord<'a> {
    round: usize,
    consensus: &'static str,
    outlier_index: Option<usize>,
    failed: Vec<usize>,
    selection: &'a JudgeSelection,
}

pub fn improve_loop(
    problem: &Problem,
    suite: &StimulusSuite,
    config: &ImproveConfig,
    gateway: &Gateway,
    backend: &dyn Backend,
    ws: Option<&ProblemWorkspace>,
) -> Result<ImproveOutcome> {
    if config.max_iterations == 0 {
        return Err(Error::Invalid("max_iterations must be >= 1".into()));
    }
    let mut set = generate_emulators(problem, config.n_samples, config.temperature, gateway)?;
    let mut judge_calls = 0;
    let mut refine_calls = 0;
    let mut round = 0;
    loop {
        let runs = run_candidates(&set, suite, backend, config.workers)?;
        if let Some(ws) = ws {
            persist_round(ws, round, &set, &runs)?;
        }
        let consensus = classify_tracesets(&runs)?;
        let selection = judge_select(&consensus, &runs, problem, &set, config.judge_temperature, gateway)?;
        judge_calls += 1;
        log::info!(
            target: "self_improve",
            "{} round {round}: {} -> candidate {} aligned={}",
            problem.id,
            consensus.tag(),
            selection.best_index,
            selection.aligned
        );
        if let Some(ws) = ws {
            let record = RoundRecord {
                round,
                consensus: consensus.tag(),
                outlier_index: match &consensus {
                    ConsensusClass::OutlierFiltered { outlier_index, .. } => Some(*outlier_index),
                    _ => None,
                },
                failed: runs.iter().filter(|r| r.outcome.is_err()).map(|r| r.index).collect(),
                selection: &selection,
            };
            ws.write(&ws.judge(round), crate::signal::to_pretty(&record))?;
        }

        let selected = set.get(selection.best_index).expect("judge picks a live candidate").clone();
        let last = round + 1 >= config.max_iterations;
        if selection.aligned || last {
            let traces = runs
                .iter()
                .find(|r| r.index == selection.best_index)
                .and_then(|r| r.outcome.as_ref().ok())
                .expect("live candidate has a trace")
                .clone();
            if let Some(ws) = ws {
                ws.write(&ws.reference_signal(), traceset_to_json(&traces))?;
                ws.write(&ws.reference_model(), format!("{}\n", selected.source))?;
            }
            return Ok(ImproveOutcome {
                model: selected,
                traces,
                aligned: selection.aligned,
                rounds: round + 1,
                judge_calls,
                refine_calls,
            });
        }

        let material = judge_material(&consensus, &runs, problem, &set);
        let next = refine(&selected, &selection, &material, config.n_samples, config.temperature, Stage::SelfImprove, gateway)?;
        refine_calls += 1;
        set = next;
        round += 1;
    }
}

fn persist_round(ws: &ProblemWorkspace, round: usize, set: &CandidateSet, runs: &[CandidateRun]) -> Result<()> {
    for c in &set.candidates {
        ws.write(&ws.candidate_source(round, c.candidate_index), format!("{}\n", c.source))?;
    }
    for r in runs {
        match &r.outcome {
            Ok(ts) => ws.write(&ws.candidate_trace(round, r.index), traceset_to_json(ts))?,
            Err(f) => ws.write(&ws.candidate_error(round, r.index), f.to_string())?,
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runtime::{ExecutionFailure, FailureKind};
    use crate::signal::{traceset_from_json, ModuleInterface, PortDecl};

    fn iface() -> ModuleInterface {
        ModuleInterface::new("m", vec![PortDecl::input("a", 2), PortDecl::output("y", 2)]).unwrap()
    }

    /// Trace set whose single output value is `label`.
    fn ts(label: u8) -> TraceSet {
        let json = format!(r#"[{{"scenario":"s","steps":[{{"inputs":{{"a":"00"}},"outputs":{{"y":"{:02b}"}}}}]}}]"#, label);
        traceset_from_json(&json, &iface()).unwrap()
    }

    fn runs(labels: &[Option<u8>]) -> Vec<CandidateRun> {
        labels
            .iter()
            .enumerate()
            .map(|(i, l)| CandidateRun {
                index: i,
                outcome: l.map(ts).ok_or_else(|| ExecutionFailure::new(FailureKind::Exception, "x")),
            })
            .collect()
    }

    fn some(labels: &[u8]) -> Vec<CandidateRun> {
        runs(&labels.iter().map(|&l| Some(l)).collect::<Vec<_>>())
    }

    #[test]
    fn consistent() {
        assert_eq!(classify_tracesets(&some(&[0, 0, 0, 0, 0])).unwrap(), ConsensusClass::Consistent { representative: ts(0) });
    }

    #[test]
    fn fourth_candidate_is_outlier() {
        match classify_tracesets(&some(&[0, 0, 0, 1, 0])).unwrap() {
            ConsensusClass::OutlierFiltered { outlier_index, evidence } => {
                assert_eq!(outlier_index, 3);
                assert_eq!(evidence.len(), 4);
                assert!(evidence.iter().all(|e| *e == ts(0)));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn no_majority_dedups_evidence() {
        assert_eq!(
            classify_tracesets(&some(&[0, 0, 1, 1, 2])).unwrap(),
            ConsensusClass::NoMajority { evidence: vec![ts(0), ts(1), ts(2)] }
        );
    }

    #[test]
    fn two_differing_is_no_majority() {
        assert!(matches!(classify_tracesets(&some(&[0, 1])).unwrap(), ConsensusClass::NoMajority { .. }));
    }

    #[test]
    fn failures_removed_before_classifying() {
        assert!(matches!(
            classify_tracesets(&runs(&[Some(0), None, Some(0)])).unwrap(),
            ConsensusClass::Consistent { .. }
        ));
        // [R, fail, R, X, R]: four successes, X is the lone outlier
        match classify_tracesets(&runs(&[Some(0), None, Some(0), Some(1), Some(0)])).unwrap() {
            ConsensusClass::OutlierFiltered { outlier_index, .. } => assert_eq!(outlier_index, 3),
            other => panic!("{other:?}"),
        }
        // [R, fail, X]: two successes only
        assert!(matches!(
            classify_tracesets(&runs(&[Some(0), None, Some(1)])).unwrap(),
            ConsensusClass::NoMajority { .. }
        ));
        assert!(matches!(classify_tracesets(&runs(&[None, None])), Err(Error::AllCandidatesFailed(_))));
    }

    /// Brute-force reading of the case split: case 1 when every pair agrees;
    /// case 2 when, with at least three candidates, some k disagrees with all
    /// others while all others agree pairwise; case 3 otherwise.
    fn oracle(labels: &[u8]) -> (&'static str, Option<usize>) {
        let n = labels.len();
        if (0..n).all(|i| (0..n).all(|j| labels[i] == labels[j])) {
            return ("consistent", None);
        }
        if n >= 3 {
            for k in 0..n {
                let others_agree = (0..n).filter(|&i| i != k).all(|i| (0..n).filter(|&j| j != k).all(|j| labels[i] == labels[j]));
                let k_differs = (0..n).filter(|&i| i != k).all(|i| labels[i] != labels[k]);
                if others_agree && k_differs {
                    return ("outlier_filtered", Some(k));
                }
            }
        }
        ("no_majority", None)
    }

    #[test]
    fn exhaustive_against_oracle_up_to_five() {
        for n in 1..=5u32 {
            for code in 0..3u32.pow(n) {
                let labels: Vec<u8> = (0..n).map(|p| ((code / 3u32.pow(p)) % 3) as u8).collect();
                let got = classify_tracesets(&some(&labels)).unwrap();
                let outlier = match &got {
                    ConsensusClass::OutlierFiltered { outlier_index, .. } => Some(*outlier_index),
                    _ => None,
                };
                assert_eq!((got.tag(), outlier), oracle(&labels), "labels {labels:?}");
            }
        }
    }
}

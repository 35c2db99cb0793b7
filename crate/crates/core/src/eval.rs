// SPDX-License-Identifier: Apache-2.0

//! Benchmark harness over a corpus of problems with golden designs and
//! labelled mutants.
//!
//! Corpus layout, one directory per problem:
//!
//! ```text
//! <root>/<problem_id>/spec.txt
//! <root>/<problem_id>/top.v              golden design
//! <root>/<problem_id>/meta.json          {"circuit_type": "CMB" | "SEQ"}, optional
//! <root>/<problem_id>/mutants/<mid>.v
//! <root>/<problem_id>/mutants/<mid>.verdict   CORRECT or INCORRECT
//! ```
//!
//! Eval1 is the fraction of problems whose generated testbench passes the
//! golden design. Eval2 at α% is the fraction of problems whose testbench
//! verdicts agree with the mutant labels on at least α% of the mutants.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::{CircuitType, Problem};
use crate::signal::TraceSet;
use crate::util::{parallel_map, read_file, write_file};
use crate::validate::{DutStatus, SimJob, Simulator};
use crate::workspace::ProblemWorkspace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GoldenVerdict {
    #[serde(rename = "CORRECT")]
    Correct,
    #[serde(rename = "INCORRECT")]
    Incorrect,
}

impl GoldenVerdict {
    pub fn as_str(self) -> &'static str {
        match self {
            GoldenVerdict::Correct => "CORRECT",
            GoldenVerdict::Incorrect => "INCORRECT",
        }
    }

    pub fn parse(text: &str) -> Option<Self> {
        match text.trim().to_ascii_uppercase().as_str() {
            "CORRECT" => Some(GoldenVerdict::Correct),
            "INCORRECT" => Some(GoldenVerdict::Incorrect),
            _ => None,
        }
    }

    /// Whether a testbench verdict on this mutant agrees with the label.
    pub fn agrees(self, status: DutStatus) -> bool {
        (status == DutStatus::Pass) == (self == GoldenVerdict::Correct)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MutantCase {
    pub id: String,
    pub source: String,
    pub golden_verdict: GoldenVerdict,
}

#[derive(Debug, Clone)]
pub struct ProblemRecord {
    pub problem: Problem,
    pub golden_dut: String,
    pub mutants: Vec<MutantCase>,
}

fn mutant_files(dir: &Path) -> Result<Vec<(String, PathBuf)>> {
    let mdir = dir.join("mutants");
    if !mdir.is_dir() {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for entry in std::fs::read_dir(&mdir).map_err(|e| Error::io(&mdir, e))? {
        let path = entry.map_err(|e| Error::io(&mdir, e))?.path();
        if path.extension().is_some_and(|x| x == "v") {
            let id = path.file_stem().unwrap().to_string_lossy().into_owned();
            out.push((id, path));
        }
    }
    out.sort();
    Ok(out)
}

pub fn load_problem_record(dir: &Path) -> Result<ProblemRecord> {
    let problem = Problem::load(dir)?;
    let golden_dut = problem.dut_source.clone().expect("loaded problems carry top.v");
    let mut mutants = Vec::new();
    for (id, path) in mutant_files(dir)? {
        let vpath = path.with_extension("verdict");
        let text = std::fs::read_to_string(&vpath)
            .map_err(|e| Error::EvalInput(format!("{}: missing golden verdict ({e})", vpath.display())))?;
        let golden_verdict = GoldenVerdict::parse(&text)
            .ok_or_else(|| Error::EvalInput(format!("{}: expected CORRECT or INCORRECT", vpath.display())))?;
        mutants.push(MutantCase { id, source: read_file(&path)?, golden_verdict });
    }
    Ok(ProblemRecord { problem, golden_dut, mutants })
}

/// Loads every problem directory under `root`, sorted by id.
pub fn load_corpus(root: &Path) -> Result<Vec<ProblemRecord>> {
    let mut dirs: Vec<PathBuf> = std::fs::read_dir(root)
        .map_err(|e| Error::EvalInput(format!("{}: {e}", root.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    dirs.sort();
    if dirs.is_empty() {
        return Err(Error::EvalInput(format!("{} contains no problems", root.display())));
    }
    let records: Vec<ProblemRecord> = dirs.iter().map(|d| load_problem_record(d)).collect::<Result<_>>()?;
    let (c, i) = mutant_split(&records);
    log::info!(target: "eval", "corpus: {} problems, {} mutants ({c} correct, {i} incorrect)", records.len(), c + i);
    Ok(records)
}

/// (correct, incorrect) mutant counts.
pub fn mutant_split(records: &[ProblemRecord]) -> (usize, usize) {
    let all = records.iter().flat_map(|r| &r.mutants);
    let correct = all.clone().filter(|m| m.golden_verdict == GoldenVerdict::Correct).count();
    (correct, all.count() - correct)
}

/// Fraction of `problems` whose golden-design verdict is PASS.
pub fn eval1(problems: &[String], verdicts: &BTreeMap<String, DutStatus>) -> Result<f64> {
    if problems.is_empty() {
        return Err(Error::EvalInput("no problems".into()));
    }
    let mut pass = 0;
    for p in problems {
        match verdicts.get(p) {
            Some(DutStatus::Pass) => pass += 1,
            Some(DutStatus::Fail) => {}
            None => return Err(Error::EvalInput(format!("no verdict for problem {p}"))),
        }
    }
    Ok(pass as f64 / problems.len() as f64)
}

/// Labels of one problem's mutants, for [`eval2`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MutantLabels {
    pub problem: String,
    pub labels: Vec<(String, GoldenVerdict)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Eval2Result {
    pub rate: f64,
    /// Problems counted in the denominator.
    pub counted: usize,
    /// Problems with no mutants, left out of the rate.
    pub excluded: Vec<String>,
}

/// (agreements, mutants) for one problem.
pub fn agreement(labels: &MutantLabels, matrix: &BTreeMap<(String, String), DutStatus>) -> Result<(usize, usize)> {
    let mut agree = 0;
    for (mid, golden) in &labels.labels {
        let status = matrix
            .get(&(labels.problem.clone(), mid.clone()))
            .ok_or_else(|| Error::EvalInput(format!("no verdict for mutant {}/{mid}", labels.problem)))?;
        if golden.agrees(*status) {
            agree += 1;
        }
    }
    Ok((agree, labels.labels.len()))
}

/// `alpha` is a percentage in 0..=100; the threshold test is exact integer
/// arithmetic.
pub fn meets(agree: usize, total: usize, alpha: u32) -> bool {
    100 * agree as u64 >= u64::from(alpha) * total as u64
}

pub fn eval2(problems: &[MutantLabels], matrix: &BTreeMap<(String, String), DutStatus>, alpha: u32) -> Result<Eval2Result> {
    if alpha > 100 {
        return Err(Error::EvalInput(format!("alpha {alpha} is not a percentage")));
    }
    let mut excluded = Vec::new();
    let mut counted = 0;
    let mut hits = 0;
    for p in problems {
        if p.labels.is_empty() {
            excluded.push(p.problem.clone());
            continue;
        }
        let (a, n) = agreement(p, matrix)?;
        counted += 1;
        if meets(a, n, alpha) {
            hits += 1;
        }
    }
    if !excluded.is_empty() {
        log::warn!(target: "eval", "problems without mutants excluded from Eval2: {}", excluded.join(", "));
    }
    let rate = if counted == 0 { 0.0 } else { hits as f64 / counted as f64 };
    Ok(Eval2Result { rate, counted, excluded })
}

/// Result of running the full pipeline on a problem's golden design.
#[derive(Debug, Clone)]
pub struct GoldenRun {
    /// Verdict of the first simulation, before any root-cause judging.
    pub pre_judge: DutStatus,
    pub post_judge: DutStatus,
    pub rounds_used: usize,
    /// Finalized testbench, reused unchanged on every mutant.
    pub testbench: String,
    pub traces: TraceSet,
}

pub trait GoldenRunner: Sync {
    fn run_golden(&self, record: &ProblemRecord, ws: &ProblemWorkspace) -> Result<GoldenRun>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MutantRow {
    pub id: String,
    pub golden: GoldenVerdict,
    pub status: DutStatus,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemRow {
    pub id: String,
    pub circuit_type: CircuitType,
    pub golden_pre_judge: DutStatus,
    pub golden_post_judge: DutStatus,
    pub rounds_used: usize,
    pub mutants: Vec<MutantRow>,
    pub agreements: usize,
    /// Set when the pipeline failed on this problem. The row then reads
    /// FAIL on the golden design and gets no Eval2 credit.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub problems: usize,
    pub eval1_pre_judge: Option<f64>,
    pub eval1_post_judge: Option<f64>,
    /// Problems with at least one mutant.
    pub eval2_problems: usize,
    pub eval2: BTreeMap<u32, Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub alphas: Vec<u32>,
    pub eval1_rate: f64,
    pub eval2_rates: BTreeMap<u32, f64>,
    pub per_type: BTreeMap<String, RateRow>,
    pub mutants_correct: usize,
    pub mutants_incorrect: usize,
    pub excluded_from_eval2: Vec<String>,
    pub problems: Vec<ProblemRow>,
}

fn frac(hits: usize, n: usize) -> Option<f64> {
    (n > 0).then(|| hits as f64 / n as f64)
}

fn rate_row(rows: &[&ProblemRow], alphas: &[u32]) -> RateRow {
    let n = rows.len();
    let pre = rows.iter().filter(|r| r.golden_pre_judge == DutStatus::Pass).count();
    let post = rows.iter().filter(|r| r.golden_post_judge == DutStatus::Pass).count();
    let with_mutants: Vec<&&ProblemRow> = rows.iter().filter(|r| !r.mutants.is_empty()).collect();
    let eval2 = alphas
        .iter()
        .map(|&a| {
            let hits = with_mutants
                .iter()
                .filter(|r| r.error.is_none() && meets(r.agreements, r.mutants.len(), a))
                .count();
            (a, frac(hits, with_mutants.len()))
        })
        .collect();
    RateRow {
        problems: n,
        eval1_pre_judge: frac(pre, n),
        eval1_post_judge: frac(post, n),
        eval2_problems: with_mutants.len(),
        eval2,
    }
}

/// Problem-weighted mean of two per-type rates.
pub fn weighted_total(a: (usize, Option<f64>), b: (usize, Option<f64>)) -> Option<f64> {
    let n = a.0 + b.0;
    if n == 0 {
        return None;
    }
    let part = |(k, r): (usize, Option<f64>)| if k == 0 { 0.0 } else { k as f64 * r.unwrap_or(0.0) };
    Some((part(a) + part(b)) / n as f64)
}

/// Builds the report from per-problem rows. TOTAL is the problem-weighted
/// mean of the CMB and SEQ rows.
pub fn assemble_report(mut rows: Vec<ProblemRow>, alphas: &[u32], split: (usize, usize)) -> EvalReport {
    rows.sort_by(|a, b| a.id.cmp(&b.id));
    let mut alphas = alphas.to_vec();
    alphas.sort_unstable_by(|a, b| b.cmp(a));
    alphas.dedup();
    let of = |t: CircuitType| rows.iter().filter(|r| r.circuit_type == t).collect::<Vec<_>>();
    let cmb = rate_row(&of(CircuitType::Combinational), &alphas);
    let seq = rate_row(&of(CircuitType::Sequential), &alphas);
    let total = RateRow {
        problems: cmb.problems + seq.problems,
        eval1_pre_judge: weighted_total((cmb.problems, cmb.eval1_pre_judge), (seq.problems, seq.eval1_pre_judge)),
        eval1_post_judge: weighted_total((cmb.problems, cmb.eval1_post_judge), (seq.problems, seq.eval1_post_judge)),
        eval2_problems: cmb.eval2_problems + seq.eval2_problems,
        eval2: alphas
            .iter()
            .map(|a| (*a, weighted_total((cmb.eval2_problems, cmb.eval2[a]), (seq.eval2_problems, seq.eval2[a]))))
            .collect(),
    };
    let eval1_rate = total.eval1_post_judge.unwrap_or(0.0);
    let eval2_rates = total.eval2.iter().map(|(a, r)| (*a, r.unwrap_or(0.0))).collect();
    let excluded = rows.iter().filter(|r| r.mutants.is_empty()).map(|r| r.id.clone()).collect();
    let mut per_type = BTreeMap::new();
    per_type.insert("CMB".to_string(), cmb);
    per_type.insert("SEQ".to_string(), seq);
    per_type.insert("TOTAL".to_string(), total);
    EvalReport {
        alphas,
        eval1_rate,
        eval2_rates,
        per_type,
        mutants_correct: split.0,
        mutants_incorrect: split.1,
        excluded_from_eval2: excluded,
        problems: rows,
    }
}

fn pct(r: Option<f64>) -> String {
    r.map(|r| format!("{:.2}%", 100.0 * r)).unwrap_or_else(|| "n/a".into())
}

/// Fixed-width table: Eval2 rows by descending α, then Eval1 after and
/// before root-cause judging.
pub fn render_report_table(report: &EvalReport) -> String {
    let cols = ["CMB", "SEQ", "TOTAL"];
    let mut out = format!("{:<18}", "Criterion");
    for c in cols {
        let n = report.per_type[c].problems;
        let _ = write!(out, "{:>14}", format!("{c} (n={n})"));
    }
    out.push('\n');
    let mut line = |label: String, get: &dyn Fn(&RateRow) -> Option<f64>| {
        let _ = write!(out, "{label:<18}");
        for c in cols {
            let _ = write!(out, "{:>14}", pct(get(&report.per_type[c])));
        }
        out.push('\n');
    };
    for a in &report.alphas {
        line(format!("Eval2-{a}%"), &|r: &RateRow| r.eval2.get(a).copied().flatten());
    }
    line("Eval1".into(), &|r: &RateRow| r.eval1_post_judge);
    line("Eval1 (pre-judge)".into(), &|r: &RateRow| r.eval1_pre_judge);
    let _ = writeln!(
        out,
        "mutants: {} correct, {} incorrect",
        report.mutants_correct, report.mutants_incorrect
    );
    out
}

pub struct BenchOptions<'a> {
    pub alphas: Vec<u32>,
    pub workers: usize,
    pub out_dir: PathBuf,
    pub resume: bool,
    pub cancel: Option<&'a AtomicBool>,
}

fn row_path(out: &Path, id: &str) -> PathBuf {
    out.join(id).join("eval_row.json")
}

fn evaluate_problem(
    record: &ProblemRecord,
    runner: &dyn GoldenRunner,
    simulator: &dyn Simulator,
    ws: &ProblemWorkspace,
) -> ProblemRow {
    let id = record.problem.id.clone();
    let failed_row = |e: &Error| ProblemRow {
        id: id.clone(),
        circuit_type: record.problem.circuit_type,
        golden_pre_judge: DutStatus::Fail,
        golden_post_judge: DutStatus::Fail,
        rounds_used: 0,
        mutants: Vec::new(),
        agreements: 0,
        error: Some(format!("{}: {e}", e.kind())),
    };
    let golden = match runner.run_golden(record, ws) {
        Ok(g) => g,
        Err(e) => {
            log::error!(target: "eval", "{id}: pipeline failed: {e}");
            let mut row = failed_row(&e);
            row.mutants = record
                .mutants
                .iter()
                .map(|m| MutantRow { id: m.id.clone(), golden: m.golden_verdict, status: DutStatus::Fail, failures: 0 })
                .collect();
            return row;
        }
    };
    let mut mutants = Vec::new();
    let mut agreements = 0;
    for m in &record.mutants {
        let workdir = ws.dir().join("mutants").join(&m.id);
        let job = SimJob {
            dut_source: &m.source,
            interface: &record.problem.interface,
            testbench: &golden.testbench,
            traces: Some(&golden.traces),
            workdir: &workdir,
        };
        let (status, failures) = match simulator.build_and_run(&job) {
            Ok(o) if o.passed => (DutStatus::Pass, 0),
            Ok(o) if !o.build_ok => {
                log::warn!(target: "eval", "{id}/{}: mutant does not build; counted as FAIL", m.id);
                (DutStatus::Fail, 0)
            }
            Ok(o) => (DutStatus::Fail, o.failure_count),
            Err(e) => {
                log::warn!(target: "eval", "{id}/{}: {e}; counted as FAIL", m.id);
                (DutStatus::Fail, 0)
            }
        };
        if m.golden_verdict.agrees(status) {
            agreements += 1;
        }
        mutants.push(MutantRow { id: m.id.clone(), golden: m.golden_verdict, status, failures });
    }
    ProblemRow {
        id,
        circuit_type: record.problem.circuit_type,
        golden_pre_judge: golden.pre_judge,
        golden_post_judge: golden.post_judge,
        rounds_used: golden.rounds_used,
        mutants,
        agreements,
        error: None,
    }
}

/// Runs every problem, reusing persisted rows when resuming, and writes
/// `eval_report.json` and `eval_report.txt` into `opts.out_dir`.
pub fn run_benchmark(
    records: &[ProblemRecord],
    runner: &dyn GoldenRunner,
    simulator: &dyn Simulator,
    opts: &BenchOptions<'_>,
) -> Result<EvalReport> {
    if opts.alphas.iter().any(|&a| a > 100) {
        return Err(Error::EvalInput("alpha must be within 0..=100".into()));
    }
    let rows = parallel_map(records, opts.workers.max(1), |_, rec| -> Result<Option<ProblemRow>> {
        let path = row_path(&opts.out_dir, &rec.problem.id);
        if opts.resume && path.exists() {
            log::info!(target: "eval", "{}: resumed from {}", rec.problem.id, path.display());
            return Ok(Some(serde_json::from_str(&read_file(&path)?)?));
        }
        if opts.cancel.is_some_and(|c| c.load(Ordering::SeqCst)) {
            return Ok(None);
        }
        let ws = ProblemWorkspace::new(opts.out_dir.join(&rec.problem.id))?;
        let row = evaluate_problem(rec, runner, simulator, &ws);
        write_file(&path, crate::signal::to_pretty(&row))?;
        Ok(Some(row))
    });
    let mut done = Vec::new();
    for r in rows {
        match r? {
            Some(row) => done.push(row),
            None => return Err(Error::Interrupted),
        }
    }
    let report = assemble_report(done, &opts.alphas, mutant_split(records));
    write_file(&opts.out_dir.join("eval_report.json"), crate::signal::to_pretty(&report))?;
    write_file(&opts.out_dir.join("eval_report.txt"), render_report_table(&report))?;
    Ok(report)
}

/// Labels every mutant by simulating it against the corpus-provided
/// `golden_tb.cpp`: PASS means CORRECT. Writes `<mid>.verdict` files and
/// returns how many were written.
pub fn derive_verdicts(corpus: &Path, simulator: &dyn Simulator, workers: usize) -> Result<usize> {
    let mut dirs: Vec<PathBuf> = std::fs::read_dir(corpus)
        .map_err(|e| Error::EvalInput(format!("{}: {e}", corpus.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    dirs.sort();
    let mut jobs = Vec::new();
    for dir in &dirs {
        let problem = Problem::load(dir)?;
        let tb_path = dir.join("golden_tb.cpp");
        let tb = std::fs::read_to_string(&tb_path)
            .map_err(|e| Error::EvalInput(format!("{}: {e}", tb_path.display())))?;
        for (mid, path) in mutant_files(dir)? {
            jobs.push((problem.clone(), tb.clone(), mid, path));
        }
    }
    let scratch = tempfile::tempdir().map_err(|e| Error::io(std::env::temp_dir(), e))?;
    let results = parallel_map(&jobs, workers.max(1), |i, (problem, tb, mid, path)| -> Result<()> {
        let source = read_file(path)?;
        let workdir = scratch.path().join(i.to_string());
        let job = SimJob { dut_source: &source, interface: &problem.interface, testbench: tb, traces: None, workdir: &workdir };
        let outcome = simulator.build_and_run(&job)?;
        if !outcome.build_ok {
            return Err(Error::Build { log: outcome.raw_log });
        }
        let v = if outcome.passed { GoldenVerdict::Correct } else { GoldenVerdict::Incorrect };
        log::info!(target: "eval", "{}/{mid}: {}", problem.id, v.as_str());
        write_file(&path.with_extension("verdict"), format!("{}\n", v.as_str()))
    });
    results.into_iter().collect::<Result<Vec<()>>>()?;
    Ok(jobs.len())
}

// SPDX-License-Identifier: Apache-2.0

// Benchmark harness over a synthetic corpus. The simulator passes a design
// iff its source carries a `// pass` marker, so every expected rate below is
// worked out by hand.

use std::sync::atomic::{AtomicUsize, Ordering};

use tbgen::eval::{run_benchmark, BenchOptions, GoldenRun, GoldenRunner, GoldenVerdict, MutantCase, ProblemRecord};
use tbgen::signal::{ModuleInterface, PortDecl, TraceSet};
use tbgen::validate::{DutStatus, FnSimulator, SimOutcome};
use tbgen::workspace::ProblemWorkspace;
use tbgen::{Error, Problem, Result};

fn record(id: &str, seq: bool, mutants: &[(&str, GoldenVerdict, bool)]) -> ProblemRecord {
    let mut ports = vec![PortDecl::input("a", 1), PortDecl::output("y", 1)];
    if seq {
        ports.insert(0, PortDecl::input("clk", 1));
    }
    let iface = ModuleInterface::new("top_module", ports).unwrap();
    ProblemRecord {
        problem: Problem::new(id, "y follows a", iface, None).unwrap(),
        golden_dut: "// pass".into(),
        mutants: mutants
            .iter()
            .map(|(m, g, pass)| MutantCase {
                id: m.to_string(),
                source: if *pass { "// pass".into() } else { "// fail".into() },
                golden_verdict: *g,
            })
            .collect(),
    }
}

fn corpus() -> Vec<ProblemRecord> {
    use GoldenVerdict::*;
    vec![
        record("p0", false, &[("m0", Incorrect, false), ("m1", Correct, true)]),
        record("p1", false, &[("m0", Incorrect, true), ("m1", Incorrect, false), ("m2", Incorrect, false)]),
        record("p2", true, &[]),
        record("p3", true, &[("m0", Incorrect, false)]),
    ]
}

struct Runner {
    calls: AtomicUsize,
}

impl GoldenRunner for Runner {
    fn run_golden(&self, record: &ProblemRecord, _ws: &ProblemWorkspace) -> Result<GoldenRun> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let (pre, post) = match record.problem.id.as_str() {
            "p0" => (DutStatus::Pass, DutStatus::Pass),
            "p1" => (DutStatus::Fail, DutStatus::Pass),
            "p2" => (DutStatus::Fail, DutStatus::Fail),
            _ => return Err(Error::EmulatorGen("no usable functional model".into())),
        };
        Ok(GoldenRun {
            pre_judge: pre,
            post_judge: post,
            rounds_used: usize::from(pre != post),
            testbench: "tb".into(),
            traces: TraceSet::new(record.problem.interface.clone(), Vec::new()).unwrap(),
        })
    }
}

fn simulator() -> FnSimulator {
    FnSimulator::new(|job| {
        let passed = job.dut_source.contains("// pass");
        Ok(SimOutcome {
            passed,
            mismatches: Vec::new(),
            failure_count: usize::from(!passed),
            raw_log: String::new(),
            build_ok: true,
        })
    })
}

fn close(a: Option<f64>, b: f64) -> bool {
    a.is_some_and(|a| (a - b).abs() < 1e-12)
}

#[test]
fn rates_match_hand_count_and_resume_is_identical() {
    let out = tempfile::tempdir().unwrap();
    let runner = Runner { calls: AtomicUsize::new(0) };
    let opts = BenchOptions {
        alphas: vec![0, 50, 80, 100],
        workers: 2,
        out_dir: out.path().to_path_buf(),
        resume: false,
        cancel: None,
    };
    let records = corpus();
    let report = run_benchmark(&records, &runner, &simulator(), &opts).unwrap();
    assert_eq!(runner.calls.load(Ordering::SeqCst), 4);
    assert_eq!(report.alphas, [100, 80, 50, 0]);
    assert_eq!((report.mutants_correct, report.mutants_incorrect), (1, 5));
    assert_eq!(report.excluded_from_eval2, ["p2"]);

    let cmb = &report.per_type["CMB"];
    assert!(close(cmb.eval1_pre_judge, 0.5) && close(cmb.eval1_post_judge, 1.0));
    assert!(close(cmb.eval2[&100], 0.5) && close(cmb.eval2[&80], 0.5));
    assert!(close(cmb.eval2[&50], 1.0) && close(cmb.eval2[&0], 1.0));

    let seq = &report.per_type["SEQ"];
    assert!(close(seq.eval1_post_judge, 0.0));
    assert_eq!(seq.eval2_problems, 1);
    // the crashed problem earns nothing, even at alpha 0
    assert!(close(seq.eval2[&0], 0.0));
    assert!(report.problems[3].error.as_deref().unwrap().starts_with("EmulatorGenError"));

    let total = &report.per_type["TOTAL"];
    assert!(close(total.eval1_post_judge, 0.5) && close(total.eval1_pre_judge, 0.25));
    assert!(close(total.eval2[&100], 1.0 / 3.0));
    assert!(close(total.eval2[&50], 2.0 / 3.0));
    assert!((report.eval1_rate - 0.5).abs() < 1e-12);

    let table = std::fs::read_to_string(out.path().join("eval_report.txt")).unwrap();
    let labels: Vec<&str> = table.lines().skip(1).take(6).map(|l| l.split_whitespace().next().unwrap()).collect();
    assert_eq!(labels, ["Eval2-100%", "Eval2-80%", "Eval2-50%", "Eval2-0%", "Eval1", "Eval1"]);

    // resume: only the deleted row is recomputed, and the report is byte-identical
    let before = std::fs::read_to_string(out.path().join("eval_report.json")).unwrap();
    std::fs::remove_file(out.path().join("p1/eval_row.json")).unwrap();
    let again = Runner { calls: AtomicUsize::new(0) };
    let resumed = BenchOptions { resume: true, ..opts };
    run_benchmark(&records, &again, &simulator(), &resumed).unwrap();
    assert_eq!(again.calls.load(Ordering::SeqCst), 1);
    assert_eq!(std::fs::read_to_string(out.path().join("eval_report.json")).unwrap(), before);
}

#[test]
fn alpha_above_100_is_rejected() {
    let out = tempfile::tempdir().unwrap();
    let opts = BenchOptions { alphas: vec![101], workers: 1, out_dir: out.path().into(), resume: false, cancel: None };
    let runner = Runner { calls: AtomicUsize::new(0) };
    let err = run_benchmark(&corpus(), &runner, &simulator(), &opts).unwrap_err();
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn cancelled_run_is_interrupted() {
    let out = tempfile::tempdir().unwrap();
    let flag = std::sync::atomic::AtomicBool::new(true);
    let opts = BenchOptions { alphas: vec![100], workers: 1, out_dir: out.path().into(), resume: false, cancel: Some(&flag) };
    let runner = Runner { calls: AtomicUsize::new(0) };
    let err = run_benchmark(&corpus(), &runner, &simulator(), &opts).unwrap_err();
    assert!(matches!(err, Error::Interrupted));
    assert_eq!(runner.calls.load(Ordering::SeqCst), 0);
}

// SPDX-License-Identifier: Apache-2.0

//! Golden pass rate and mutant agreement at several thresholds.
//!
//! cargo run --example eval_metrics

use std::collections::BTreeMap;

use tbgen::eval::{agreement, eval1, eval2, GoldenVerdict, MutantLabels};
use tbgen::validate::DutStatus::{Fail, Pass};

fn main() -> tbgen::Result<()> {
    use GoldenVerdict::{Correct, Incorrect};

    // golden designs: does the generated testbench accept them?
    let problems: Vec<String> = ["adder2", "counter4", "fsm3"].map(String::from).to_vec();
    let golden = BTreeMap::from([
        ("adder2".to_string(), Pass),
        ("counter4".to_string(), Pass),
        ("fsm3".to_string(), Fail),
    ]);
    println!("Eval1 = {:.2}%", 100.0 * eval1(&problems, &golden)?);

    // mutants with known labels, and the verdicts the testbenches gave
    let labels = vec![
        MutantLabels {
            problem: "adder2".into(),
            labels: vec![("carry_dropped".into(), Incorrect), ("commuted".into(), Correct)],
        },
        MutantLabels {
            problem: "counter4".into(),
            labels: vec![
                ("reset_ignored".into(), Incorrect),
                ("saturating".into(), Incorrect),
                ("ternary".into(), Correct),
                ("off_by_one".into(), Incorrect),
            ],
        },
        MutantLabels { problem: "fsm3".into(), labels: vec![] },
    ];
    let key = |p: &str, m: &str| (p.to_string(), m.to_string());
    let verdicts = BTreeMap::from([
        (key("adder2", "carry_dropped"), Fail),
        (key("adder2", "commuted"), Pass),
        (key("counter4", "reset_ignored"), Fail),
        (key("counter4", "saturating"), Pass),
        (key("counter4", "ternary"), Pass),
        (key("counter4", "off_by_one"), Fail),
    ]);
    for l in &labels[..2] {
        let (agree, n) = agreement(l, &verdicts)?;
        println!("{}: {agree}/{n} verdicts agree with the labels", l.problem);
    }
    for alpha in [100, 80, 50] {
        let r = eval2(&labels, &verdicts, alpha)?;
        println!("Eval2-{alpha}% = {:.2}% over {} problems (excluded: {:?})", 100.0 * r.rate, r.counted, r.excluded);
    }
    Ok(())
}

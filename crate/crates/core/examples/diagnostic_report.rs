// SPDX-License-Identifier: Apache-2.0

//! Turning simulator output into the narrative the root-cause judge reads.
//!
//! cargo run --example diagnostic_report

use tbgen::signal::{ModuleInterface, PortDecl};
use tbgen::stimulus::ScenarioPlan;
use tbgen::validate::{parse_sim_output, render_report};
use tbgen::Problem;

const LOG: &str = "\
MISMATCH scenario=overflow step=3 signal=s expected=100 actual=000
MISMATCH scenario=overflow step=4 signal=s expected=101 actual=001
MISMATCH scenario=overflow step=5 signal=s expected=110 actual=010
MISMATCH scenario=mixed step=0 signal=s expected=011 actual=001
RESULT: FAIL failures=4
";

fn main() -> tbgen::Result<()> {
    let iface = ModuleInterface::new(
        "top_module",
        vec![PortDecl::input("a", 2), PortDecl::input("b", 2), PortDecl::output("s", 3)],
    )?;
    let problem = Problem::new("adder2", "s = a + b, keeping the carry.", iface, None)?;
    let plan = ScenarioPlan {
        text: "1. id: overflow\n   sums that need the carry bit\n2. id: mixed\n   one operand zero".into(),
    };

    let outcome = parse_sim_output(LOG, Some(1))?;
    println!("parsed {} mismatches, failures={}\n", outcome.mismatches.len(), outcome.failure_count);
    let report = render_report(&outcome, &plan, &problem)?;
    println!("{}", report.narrative);
    Ok(())
}

// SPDX-License-Identifier: Apache-2.0

//! Full pipeline on the bundled micro-corpus, replaying recorded model and
//! runtime answers: generate a testbench for the counter, then validate the
//! golden design and a mutant that ignores reset. Needs `verilator`.
//!
//! cargo run --example pipeline

use std::path::Path;

use tbgen::config::RunConfig;
use tbgen::pipeline::{gen_tb, simulator_from_config, verify, Services};
use tbgen::workspace::Workspace;
use tbgen::Problem;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data");
    let scratch = tempfile::tempdir()?;
    let mut config = RunConfig::load(Some(&data.join("micro_config.json")), &[])?;
    config.workspace = scratch.path().to_path_buf();

    let simulator = match simulator_from_config(&config) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("skipping: {e}");
            return Ok(());
        }
    };
    let services = Services::from_config(&config)?;
    let problem_dir = data.join("corpus/counter4");
    let problem = Problem::load(&problem_dir)?;
    let ws = Workspace::new(&config.workspace)?.problem(&problem.id)?;
    let gateway = services.gateway(Some(&ws));

    let tb = gen_tb(&services, &problem, &gateway, &ws, false)?;
    println!(
        "gen-tb: {} scenarios, {} steps, aligned={} after {} improve rounds",
        tb.suite.scenarios().len(),
        tb.suite.total_steps(),
        tb.aligned,
        tb.improve_rounds
    );

    let golden = problem.dut_source.clone().unwrap_or_default();
    let v = verify(&services, &problem, &golden, &gateway, &simulator, &ws, false)?;
    println!("golden top.v: {}", v.verdict_line());

    // each design gets its own copy of the generated testbench
    let mutant_ws = Workspace::new(scratch.path().join("mutant"))?.problem(&problem.id)?;
    gen_tb(&services, &problem, &gateway, &mutant_ws, false)?;
    let mutant = std::fs::read_to_string(problem_dir.join("mutants/reset_ignored.v"))?;
    let v = verify(&services, &problem, &mutant, &gateway, &simulator, &mutant_ws, false)?;
    if let Some(last) = v.history.last() {
        for d in last.outcome.mismatches.iter().take(3) {
            println!("  {}", tbgen::codegen::mismatch_line(d));
        }
    }
    println!("reset_ignored.v: {}", v.verdict_line());
    println!("\nartifacts in {}", ws.dir().display());
    Ok(())
}

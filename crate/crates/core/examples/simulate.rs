// SPDX-License-Identifier: Apache-2.0

//! Build a generated testbench with Verilator against a correct adder and a
//! mutant that drops the carry. Needs `verilator` on PATH.
//!
//! cargo run --example simulate

use tbgen::codegen::{emit_testbench, CodegenOptions};
use tbgen::signal::{parse_verilog_interface, traceset_from_json};
use tbgen::validate::{SimJob, Simulator, VerilatorSimulator};

const GOLDEN: &str = "module top_module(input [1:0] a, input [1:0] b, output [2:0] s);\n  assign s = a + b;\nendmodule\n";
const MUTANT: &str = "module top_module(input [1:0] a, input [1:0] b, output [2:0] s);\n  assign s = {1'b0, a + b};\nendmodule\n";

const TRACES: &str = r#"[{"scenario": "carry", "steps": [
    {"inputs": {"a": "01", "b": "01"}, "outputs": {"s": "010"}},
    {"inputs": {"a": "11", "b": "01"}, "outputs": {"s": "100"}},
    {"inputs": {"a": "11", "b": "11"}, "outputs": {"s": "110"}}]}]"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sim = match VerilatorSimulator::probe("verilator") {
        Ok(s) => s,
        Err(e) => {
            eprintln!("skipping: {e}");
            return Ok(());
        }
    };
    println!("simulator: {}", sim.name());

    let iface = parse_verilog_interface(GOLDEN)?;
    let traces = traceset_from_json(TRACES, &iface)?;
    let tb = emit_testbench(&iface, &traces, &CodegenOptions::for_interface(&iface)?)?;

    let scratch = tempfile::tempdir()?;
    for (name, dut) in [("golden", GOLDEN), ("mutant", MUTANT)] {
        let workdir = scratch.path().join(name);
        let job = SimJob { dut_source: dut, interface: &iface, testbench: &tb, traces: Some(&traces), workdir: &workdir };
        let out = sim.build_and_run(&job)?;
        println!("\n{name}: passed={} failures={}", out.passed, out.failure_count);
        for line in out.raw_log.lines().filter(|l| l.starts_with("MISMATCH") || l.starts_with("RESULT")) {
            println!("  {line}");
        }
    }
    Ok(())
}

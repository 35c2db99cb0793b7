// SPDX-License-Identifier: Apache-2.0

//! Self-checking C++ testbench for a sequential design, from reference traces.
//!
//! cargo run --example emit_testbench

use tbgen::codegen::{emit_testbench, CodegenOptions};
use tbgen::signal::{traceset_from_json, ModuleInterface, PortDecl};

fn main() -> tbgen::Result<()> {
    let iface = ModuleInterface::new(
        "top_module",
        vec![PortDecl::input("clk", 1), PortDecl::input("reset", 1), PortDecl::output("q", 4)],
    )?;
    let traces = traceset_from_json(
        r#"[{"scenario": "count", "steps": [
            {"inputs": {"reset": "1"}, "outputs": {"q": "0000"}},
            {"inputs": {"reset": "0"}, "outputs": {"q": "0001"}},
            {"inputs": {"reset": "0"}, "outputs": {"q": "0010"}}]}]"#,
        &iface,
    )?;
    let opts = CodegenOptions::for_interface(&iface)?;
    println!("clock: {:?}\n", opts.clock_port);
    print!("{}", emit_testbench(&iface, &traces, &opts)?);
    Ok(())
}

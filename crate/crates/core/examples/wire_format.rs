// SPDX-License-Identifier: Apache-2.0

//! Stimulus suites and trace sets on the wire: JSON with binary strings.
//!
//! cargo run --example wire_format

use tbgen::signal::{
    compare_tracesets, stimulus_from_json, stimulus_to_json, traceset_from_json, traceset_to_json, ModuleInterface,
    PortDecl,
};

fn main() -> tbgen::Result<()> {
    let iface = ModuleInterface::new(
        "top_module",
        vec![PortDecl::input("a", 2), PortDecl::input("b", 2), PortDecl::output("s", 3)],
    )?;

    // a step may leave an input out; it keeps its previous value
    let suite = stimulus_from_json(
        r#"[{"scenario": "corners", "steps": [{"a": "00", "b": "00"}, {"a": "11"}, {"b": "11"}]}]"#,
        &iface,
    )?;
    println!("stimulus:\n{}", stimulus_to_json(&suite));

    let expected = traceset_from_json(
        r#"[{"scenario": "corners", "steps": [
            {"inputs": {"a": "00", "b": "00"}, "outputs": {"s": "000"}},
            {"inputs": {"a": "11", "b": "00"}, "outputs": {"s": "011"}},
            {"inputs": {"a": "11", "b": "11"}, "outputs": {"s": "110"}}]}]"#,
        &iface,
    )?;
    let text = traceset_to_json(&expected);
    assert_eq!(traceset_from_json(&text, &iface)?, expected);

    // a design that drops the carry
    let actual = traceset_from_json(&text.replace("\"110\"", "\"010\""), &iface)?;
    for d in compare_tracesets(&expected, &actual)? {
        println!("diff: {} step {} {}: {} vs {}", d.scenario_id, d.step_index, d.signal, d.expected, d.actual);
    }
    Ok(())
}

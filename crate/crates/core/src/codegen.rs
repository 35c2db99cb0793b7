// SPDX-License-Identifier: Apache-2.0

//! Compiles a reference trace set into a self-checking Verilator `sim_main.cpp`.
//!
//! Every scenario gets a fresh model instance. A step assigns the data
//! inputs, then evaluates once (combinational) or runs one clock cycle:
//! eval with the clock low, eval with the clock high, sample outputs.
//! Outputs are compared every step. The program prints
//!
//! ```text
//! MISMATCH scenario=<id> step=<k> signal=<name> expected=<binary> actual=<binary>
//! RESULT: PASS | RESULT: FAIL failures=<n>
//! ```
//!
//! and exits 0 on pass, 1 on any mismatch.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::signal::{format_bitvector, BitVector, ModuleInterface, PortDecl, TraceDiff, TraceSet};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodegenOptions {
    /// Verilator model class, `V<module>` by default.
    pub top_class_name: String,
    pub clock_port: Option<String>,
    pub max_failures_reported: usize,
    pub max_scenarios: usize,
    pub max_total_steps: usize,
}

impl CodegenOptions {
    pub fn for_interface(interface: &ModuleInterface) -> Result<Self> {
        Ok(Self {
            top_class_name: format!("V{}", interface.module_name()),
            clock_port: select_clock(interface)?,
            max_failures_reported: 64,
            max_scenarios: 256,
            max_total_steps: 4096,
        })
    }
}

pub fn select_clock(interface: &ModuleInterface) -> Result<Option<String>> {
    let clocks: Vec<String> = interface.clock_ports().map(|p| p.name.clone()).collect();
    match clocks.len() {
        0 => Ok(None),
        1 => Ok(clocks.into_iter().next()),
        _ => Err(Error::AmbiguousClock(clocks)),
    }
}

/// Single mismatch line, in the exact form the generated program prints.
pub fn mismatch_line(diff: &TraceDiff) -> String {
    format!(
        "MISMATCH scenario={} step={} signal={} expected={} actual={}",
        diff.scenario_id,
        diff.step_index,
        diff.signal,
        format_bitvector(&diff.expected),
        format_bitvector(&diff.actual)
    )
}

/// Characters allowed in scenario ids that end up in mismatch lines.
pub fn is_token(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
}

const PRELUDE: &str = r#"
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

namespace {

long g_failures = 0;

std::string to_binary(uint64_t value, int width) {
    std::string s(width, '0');
    for (int i = 0; i < width; ++i) {
        if ((value >> i) & 1ULL) s[width - 1 - i] = '1';
    }
    return s;
}

std::string words_to_binary(const uint32_t* words, int width) {
    std::string s(width, '0');
    for (int i = 0; i < width; ++i) {
        if ((words[i / 32] >> (i % 32)) & 1U) s[width - 1 - i] = '1';
    }
    return s;
}

void report(const char* scenario, int step, const char* signal, const std::string& expected, const std::string& actual) {
    if (g_failures < kMaxReported) {
        std::printf("MISMATCH scenario=%s step=%d signal=%s expected=%s actual=%s\n", scenario, step, signal,
                    expected.c_str(), actual.c_str());
    }
    ++g_failures;
}

void check(const char* scenario, int step, const char* signal, uint64_t actual, uint64_t expected, int width) {
    const uint64_t mask = width >= 64 ? ~0ULL : ((1ULL << width) - 1ULL);
    actual &= mask;
    if (actual != expected) {
        report(scenario, step, signal, to_binary(expected, width), to_binary(actual, width));
    }
}

void check_wide(const char* scenario, int step, const char* signal, const uint32_t* actual, const uint32_t* expected,
                int width) {
    const int words = (width + 31) / 32;
    std::vector<uint32_t> got(actual, actual + words);
    if (width % 32 != 0) got[words - 1] &= (1U << (width % 32)) - 1U;
    for (int i = 0; i < words; ++i) {
        if (got[i] != expected[i]) {
            report(scenario, step, signal, words_to_binary(expected, width), words_to_binary(got.data(), width));
            return;
        }
    }
}

"#;

fn literal64(v: &BitVector) -> String {
    format!("0x{:x}ULL", v.to_u64().expect("width <= 64"))
}

fn limbs_literal(v: &BitVector) -> String {
    let limbs: Vec<String> = v.limbs32().iter().map(|l| format!("0x{l:08x}U")).collect();
    format!("{{{}}}", limbs.join(", "))
}

fn assign(out: &mut String, port: &PortDecl, value: &BitVector) {
    let bits = format_bitvector(value);
    if port.width <= 64 {
        let _ = writeln!(out, "    top->{} = {};  // {bits}", port.name, literal64(value));
    } else {
        let _ = writeln!(out, "    // {} = {bits}", port.name);
        for (i, limb) in value.limbs32().iter().enumerate() {
            let _ = writeln!(out, "    top->{}[{i}] = 0x{limb:08x}U;", port.name);
        }
    }
}

fn compare(out: &mut String, port: &PortDecl, step: usize, value: &BitVector) {
    let bits = format_bitvector(value);
    if port.width <= 64 {
        let _ = writeln!(
            out,
            "    check(id, {step}, \"{name}\", static_cast<uint64_t>(top->{name}), {lit}, {w});  // {bits}",
            name = port.name,
            lit = literal64(value),
            w = port.width
        );
    } else {
        let _ = writeln!(out, "    {{  // {} = {bits}", port.name);
        let _ = writeln!(out, "        static const uint32_t expected[] = {};", limbs_literal(value));
        let _ = writeln!(
            out,
            "        check_wide(id, {step}, \"{name}\", top->{name}.data(), expected, {w});",
            name = port.name,
            w = port.width
        );
        out.push_str("    }\n");
    }
}

pub fn emit_testbench(interface: &ModuleInterface, traces: &TraceSet, opts: &CodegenOptions) -> Result<String> {
    if traces.interface() != interface {
        return Err(Error::Codegen("trace set was recorded for a different interface".into()));
    }
    if let Some(clk) = &opts.clock_port {
        if !interface.port(clk).is_some_and(|p| p.is_clock) {
            return Err(Error::Codegen(format!("{clk} is not the interface clock")));
        }
    }
    let total: usize = traces.traces().iter().map(|t| t.steps.len()).sum();
    if traces.traces().is_empty() {
        return Err(Error::Codegen("no scenarios to emit".into()));
    }
    if traces.traces().len() > opts.max_scenarios || total > opts.max_total_steps {
        return Err(Error::Codegen(format!(
            "{} scenarios / {total} steps exceed the limits {} / {}",
            traces.traces().len(),
            opts.max_scenarios,
            opts.max_total_steps
        )));
    }
    if let Some(bad) = traces.traces().iter().find(|t| !is_token(&t.scenario_id)) {
        return Err(Error::Codegen(format!("scenario id {:?} cannot appear in a mismatch line", bad.scenario_id)));
    }

    let class = &opts.top_class_name;
    let inputs: Vec<&PortDecl> = interface.data_inputs().collect();
    let outputs: Vec<&PortDecl> = interface.outputs().collect();
    let clock = opts.clock_port.as_deref();

    let mut out = String::new();
    let _ = writeln!(out, "// Generated by tbgen. Do not edit.");
    let _ = writeln!(
        out,
        "// module {} ({}), {} scenarios, {total} steps",
        interface.module_name(),
        if clock.is_some() { "sequential" } else { "combinational" },
        traces.traces().len()
    );
    let _ = writeln!(out, "#include \"{class}.h\"\n#include \"verilated.h\"");
    out.push_str("\nstatic const long kMaxReported = ");
    let _ = write!(out, "{};\n", opts.max_failures_reported);
    out.push_str(PRELUDE);

    for (s, trace) in traces.traces().iter().enumerate() {
        let _ = writeln!(out, "void scenario_{s}() {{");
        let _ = writeln!(out, "    const char* id = \"{}\";", trace.scenario_id);
        let _ = writeln!(out, "    VerilatedContext* ctx = new VerilatedContext;");
        let _ = writeln!(out, "    {class}* top = new {class}{{ctx}};");
        if let Some(clk) = clock {
            let _ = writeln!(out, "    top->{clk} = 0;");
        }
        for (k, step) in trace.steps.iter().enumerate() {
            let _ = writeln!(out, "    // step {k}");
            for p in &inputs {
                assign(&mut out, p, &step.inputs[&p.name]);
            }
            match clock {
                Some(clk) => {
                    let _ = writeln!(out, "    top->{clk} = 0;\n    top->eval();\n    top->{clk} = 1;\n    top->eval();");
                }
                None => out.push_str("    top->eval();\n"),
            }
            for p in &outputs {
                compare(&mut out, p, k, &step.outputs[&p.name]);
            }
        }
        out.push_str("    top->final();\n    delete top;\n    delete ctx;\n}\n\n");
    }
    out.push_str("}  // namespace\n\nint main(int argc, char** argv) {\n    (void)argc;\n    (void)argv;\n");
    for s in 0..traces.traces().len() {
        let _ = writeln!(out, "    scenario_{s}();");
    }
    out.push_str(
        "    if (g_failures == 0) {\n        std::printf(\"RESULT: PASS\\n\");\n        return 0;\n    }\n    std::printf(\"RESULT: FAIL failures=%ld\\n\", g_failures);\n    return 1;\n}\n",
    );
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{traceset_from_json, PortDecl};

    fn cmb() -> ModuleInterface {
        ModuleInterface::new("ident", vec![PortDecl::input("a", 3), PortDecl::output("y", 3)]).unwrap()
    }

    #[test]
    fn clock_selection() {
        assert_eq!(select_clock(&cmb()).unwrap(), None);
        let seq = ModuleInterface::new("c", vec![PortDecl::input("clk", 1), PortDecl::output("q", 1)]).unwrap();
        assert_eq!(select_clock(&seq).unwrap().as_deref(), Some("clk"));
        let two = ModuleInterface::new(
            "c",
            vec![PortDecl::input("clk", 1), PortDecl::input("clock", 1), PortDecl::output("q", 1)],
        )
        .unwrap();
        assert!(matches!(select_clock(&two), Err(Error::AmbiguousClock(v)) if v.len() == 2));
    }

    #[test]
    fn combinational_unit_shape() {
        let ts = traceset_from_json(r#"[{"scenario":"s0_a","steps":[{"inputs":{"a":"101"},"outputs":{"y":"101"}}]}]"#, &cmb()).unwrap();
        let text = emit_testbench(&cmb(), &ts, &CodegenOptions::for_interface(&cmb()).unwrap()).unwrap();
        assert!(text.contains("#include \"Vident.h\""));
        assert!(text.contains("top->a = 0x5ULL;  // 101"));
        assert!(text.contains("check(id, 0, \"y\", static_cast<uint64_t>(top->y), 0x5ULL, 3);  // 101"));
        assert_eq!(text.matches("top->eval();").count(), 1);
        assert!(text.contains("RESULT: FAIL failures=%ld"));
        // deterministic
        assert_eq!(text, emit_testbench(&cmb(), &ts, &CodegenOptions::for_interface(&cmb()).unwrap()).unwrap());
    }

    #[test]
    fn wide_ports_go_limb_wise() {
        let i = ModuleInterface::new("w", vec![PortDecl::input("a", 70), PortDecl::output("y", 70)]).unwrap();
        let v = format!("1{}1", "0".repeat(68));
        let json = format!(r#"[{{"scenario":"s","steps":[{{"inputs":{{"a":"{v}"}},"outputs":{{"y":"{v}"}}}}]}}]"#);
        let ts = traceset_from_json(&json, &i).unwrap();
        let text = emit_testbench(&i, &ts, &CodegenOptions::for_interface(&i).unwrap()).unwrap();
        assert!(text.contains("top->a[0] = 0x00000001U;"));
        assert!(text.contains("top->a[2] = 0x00000020U;"));
        assert!(text.contains("static const uint32_t expected[] = {0x00000001U, 0x00000000U, 0x00000020U};"));
        assert!(text.contains("check_wide(id, 0, \"y\", top->y.data(), expected, 70);"));
    }

    #[test]
    fn rejects_inconsistent_input() {
        let ts = traceset_from_json(r#"[{"scenario":"has space","steps":[{"inputs":{"a":"101"},"outputs":{"y":"101"}}]}]"#, &cmb()).unwrap();
        assert!(matches!(
            emit_testbench(&cmb(), &ts, &CodegenOptions::for_interface(&cmb()).unwrap()),
            Err(Error::Codegen(_))
        ));
        let other = ModuleInterface::new("ident", vec![PortDecl::input("a", 3), PortDecl::output("z", 3)]).unwrap();
        let ts = traceset_from_json(r#"[{"scenario":"s","steps":[{"inputs":{"a":"101"},"outputs":{"y":"101"}}]}]"#, &cmb()).unwrap();
        assert!(matches!(
            emit_testbench(&other, &ts, &CodegenOptions::for_interface(&other).unwrap()),
            Err(Error::Codegen(_))
        ));
        let mut opts = CodegenOptions::for_interface(&cmb()).unwrap();
        opts.max_total_steps = 0;
        assert!(emit_testbench(&cmb(), &ts, &opts).is_err());
    }
}

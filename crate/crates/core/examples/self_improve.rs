// SPDX-License-Identifier: Apache-2.0

//! The sample, simulate, judge and refine loop on a toy problem, driven by a
//! scripted model so it runs offline. The first samples disagree on the
//! carry; the judge asks for a fix and the refined models agree.
//!
//! cargo run --example self_improve

use std::sync::Arc;

use tbgen::improve::{improve_loop, ImproveConfig};
use tbgen::llm::{ledger_report, render_ledger_table, Completion, Gateway, PromptBundle, ScriptedProvider};
use tbgen::prompts::{EMULATOR_SYSTEM, JUDGE_SYSTEM, REFINE_SYSTEM};
use tbgen::runtime::{ExecutionFailure, FailureKind, FnBackend};
use tbgen::signal::{format_bitvector, stimulus_from_json, ModuleInterface, PortDecl, RawTrace, RawTraceStep};
use tbgen::{Error, Problem};

fn model(carry: bool) -> String {
    let mask = if carry { "0b111" } else { "0b011" };
    format!(
        "```python\nclass Python_DUT:\n    def load(self, inputs):\n        s = (int(inputs[\"a\"], 2) + int(inputs[\"b\"], 2)) & {mask}\n        return {{\"s\": format(s, \"03b\")}}\n```"
    )
}

fn main() -> tbgen::Result<()> {
    let iface = ModuleInterface::new(
        "top_module",
        vec![PortDecl::input("a", 2), PortDecl::input("b", 2), PortDecl::output("s", 3)],
    )?;
    let problem = Problem::new("adder2", "A 2-bit adder: s = a + b, 3 bits wide, keeping the carry.", iface, None)?;
    let suite = stimulus_from_json(
        r#"[{"scenario": "sums", "steps": [{"a": "01", "b": "01"}, {"a": "11", "b": "11"}, {"a": "10", "b": "01"}]}]"#,
        &problem.interface,
    )?;

    let provider = ScriptedProvider::new(|p: &PromptBundle, idx| {
        let text = if p.system == EMULATOR_SYSTEM {
            // samples 1 and 3 forget the carry
            model(idx % 2 == 0)
        } else if p.system == JUDGE_SYSTEM && p.user.contains("disagree") {
            "```json\n{\"best\": 0, \"aligned\": false, \"analysis\": \"candidates 1 and 3 drop the carry at step 1\"}\n```".into()
        } else if p.system == JUDGE_SYSTEM {
            "```json\n{\"best\": 0, \"aligned\": true, \"analysis\": \"matches the specification\"}\n```".into()
        } else if p.system == REFINE_SYSTEM {
            model(true)
        } else {
            return Err(Error::Provider("unexpected prompt".into()));
        };
        Ok(Completion::new(text, 120, 40))
    });
    let gateway = Gateway::new(Arc::new(provider));

    // stands in for the Python runtime: evaluates the two model variants
    let backend = FnBackend::new(
        |_| Err(ExecutionFailure::new(FailureKind::MissingEntryPoint, "stimulus not used here")),
        |script, suite| {
            let mask = if script.contains("0b111") { 7 } else { 3 };
            Ok(suite
                .scenarios()
                .iter()
                .map(|sc| RawTrace {
                    scenario: sc.id.clone(),
                    steps: sc
                        .steps
                        .iter()
                        .map(|st| {
                            let a = st.assignments["a"].to_u64().unwrap();
                            let b = st.assignments["b"].to_u64().unwrap();
                            RawTraceStep {
                                inputs: st.assignments.iter().map(|(k, v)| (k.clone(), format_bitvector(v))).collect(),
                                outputs: [("s".to_string(), format!("{:03b}", (a + b) & mask))].into(),
                            }
                        })
                        .collect(),
                })
                .collect())
        },
    );

    let config = ImproveConfig { n_samples: 4, ..ImproveConfig::default() };
    let out = improve_loop(&problem, &suite, &config, &gateway, &backend, None)?;
    println!(
        "aligned={} after {} rounds ({} judge calls, {} refinements); model generation {}",
        out.aligned, out.rounds, out.judge_calls, out.refine_calls, out.model.generation
    );
    println!("{}", tbgen::signal::traceset_to_json(&out.traces));
    print!("{}", render_ledger_table(&ledger_report(&gateway.ledger())));
    Ok(())
}

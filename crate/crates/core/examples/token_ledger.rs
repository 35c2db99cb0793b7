// SPDX-License-Identifier: Apache-2.0

//! Per-stage token accounting, replaying recorded completions from disk.
//!
//! cargo run --example token_ledger

use std::sync::Arc;

use tbgen::llm::{
    ledger_report, render_ledger_table, Completion, FixtureProvider, Gateway, PromptBundle, SamplingParams, Stage,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let calls = [
        (PromptBundle::new("plan", "scenarios for a counter"), Stage::Stimulus, 2, (410, 95)),
        (PromptBundle::new("model", "python model of a counter"), Stage::Emulator, 5, (880, 210)),
        (PromptBundle::new("judge", "pick the best candidate"), Stage::SelfImprove, 1, (2400, 120)),
        (PromptBundle::new("root cause", "design or model?"), Stage::JudgeValidate, 1, (1900, 60)),
    ];
    // recordings are keyed by prompt content and sample index
    for (prompt, _, n, (pt, ct)) in &calls {
        for i in 0..*n {
            FixtureProvider::write(dir.path(), prompt, i, &Completion::new(format!("reply {i}"), *pt, *ct))?;
        }
    }

    let gateway = Gateway::new(Arc::new(FixtureProvider::new(dir.path())));
    for (prompt, stage, n, _) in &calls {
        gateway.complete(prompt, &SamplingParams::new(0.3, *n), *stage)?;
    }
    print!("{}", render_ledger_table(&ledger_report(&gateway.ledger())));

    // an unrecorded prompt is a loud miss, never a live call
    let miss = gateway.complete(&PromptBundle::new("x", "never recorded"), &SamplingParams::new(0.0, 1), Stage::Stimulus);
    println!("\nunrecorded prompt: {}", miss.unwrap_err());
    Ok(())
}

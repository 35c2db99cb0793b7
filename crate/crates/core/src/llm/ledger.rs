// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Pipeline stage that a model call is charged to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Stimulus,
    Emulator,
    SelfImprove,
    JudgeValidate,
}

impl Stage {
    pub const ALL: [Stage; 4] = [Stage::Stimulus, Stage::Emulator, Stage::SelfImprove, Stage::JudgeValidate];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Stimulus => "stimulus",
            Stage::Emulator => "emulator",
            Stage::SelfImprove => "self_improve",
            Stage::JudgeValidate => "judge_validate",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageUsage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

/// Per-stage token usage. Counts only ever grow.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenLedger {
    stages: BTreeMap<Stage, StageUsage>,
}

impl TokenLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, stage: Stage, prompt_tokens: u64, completion_tokens: u64) {
        let e = self.stages.entry(stage).or_default();
        e.prompt_tokens += prompt_tokens;
        e.completion_tokens += completion_tokens;
    }

    pub fn usage(&self, stage: Stage) -> StageUsage {
        self.stages.get(&stage).copied().unwrap_or_default()
    }

    /// Adds every stage of `other` into `self`.
    pub fn merge(&mut self, other: &TokenLedger) {
        for (stage, u) in &other.stages {
            self.add(*stage, u.prompt_tokens, u.completion_tokens);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerRow {
    pub stage: Stage,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub total: u64,
}

/// One row per stage, in declaration order, zero rows included.
pub fn ledger_report(ledger: &TokenLedger) -> Vec<LedgerRow> {
    Stage::ALL
        .iter()
        .map(|&stage| {
            let u = ledger.usage(stage);
            LedgerRow {
                stage,
                prompt_tokens: u.prompt_tokens,
                completion_tokens: u.completion_tokens,
                total: u.prompt_tokens + u.completion_tokens,
            }
        })
        .collect()
}

pub fn render_ledger_table(rows: &[LedgerRow]) -> String {
    let mut out = format!("{:<16}{:>14}{:>18}{:>12}\n", "stage", "prompt_tokens", "completion_tokens", "total");
    for r in rows {
        out.push_str(&format!(
            "{:<16}{:>14}{:>18}{:>12}\n",
            r.stage.as_str(),
            r.prompt_tokens,
            r.completion_tokens,
            r.total
        ));
    }
    out
}

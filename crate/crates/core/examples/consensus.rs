// SPDX-License-Identifier: Apache-2.0

//! Grouping candidate waveforms: consistent, one outlier, or no majority.
//!
//! cargo run --example consensus

use tbgen::emulator::CandidateRun;
use tbgen::improve::{classify_tracesets, ConsensusClass};
use tbgen::runtime::{ExecutionFailure, FailureKind};
use tbgen::signal::{BitVector, ModuleInterface, PortDecl, Trace, TraceSet, TraceStep};

fn waveform(y: u64) -> TraceSet {
    let iface = ModuleInterface::new("m", vec![PortDecl::input("a", 1), PortDecl::output("y", 2)]).unwrap();
    let step = TraceStep {
        inputs: [("a".to_string(), BitVector::zero(1).unwrap())].into(),
        outputs: [("y".to_string(), BitVector::from_u64(2, y).unwrap())].into(),
    };
    TraceSet::new(iface, vec![Trace { scenario_id: "s".into(), steps: vec![step] }]).unwrap()
}

fn runs(labels: &[Option<u64>]) -> Vec<CandidateRun> {
    labels
        .iter()
        .enumerate()
        .map(|(index, l)| CandidateRun {
            index,
            outcome: l.map(waveform).ok_or_else(|| ExecutionFailure::new(FailureKind::Exception, "ZeroDivisionError")),
        })
        .collect()
}

fn main() -> tbgen::Result<()> {
    let cases: [&[Option<u64>]; 5] = [
        &[Some(1), Some(1), Some(1)],
        &[Some(1), Some(1), Some(2), Some(1), Some(1)],
        &[Some(1), Some(2)],
        &[Some(1), Some(1), Some(2), Some(2), Some(3)],
        &[Some(1), None, Some(3), Some(1), Some(1)],
    ];
    for labels in cases {
        let class = classify_tracesets(&runs(labels))?;
        let detail = match &class {
            ConsensusClass::Consistent { .. } => String::new(),
            ConsensusClass::OutlierFiltered { outlier_index, .. } => format!(" (outlier: candidate {outlier_index})"),
            ConsensusClass::NoMajority { evidence } => format!(" ({} distinct waveforms)", evidence.len()),
        };
        println!("{:<44} -> {}{detail}", format!("{labels:?}"), class.tag());
    }
    Ok(())
}

// SPDX-License-Identifier: Apache-2.0

//! Signal values, module interfaces, stimulus/trace containers and their
//! JSON wire formats.

mod bitvec;
mod interface;
mod trace;
mod wire;

pub use bitvec::{format_bitvector, parse_bitvector, BitVector};
pub use interface::{parse_verilog_interface, Direction, ModuleInterface, PortDecl};
pub use trace::{
    compare_tracesets, traces_equal, Scenario, StimulusStep, StimulusSuite, Trace, TraceDiff, TraceSet, TraceStep,
};
pub use wire::{
    stimulus_from_json, stimulus_to_json, traceset_from_json, traceset_from_raw, traceset_to_json, RawScenario,
    RawStep, RawTrace, RawTraceStep,
};
pub(crate) use wire::to_pretty;

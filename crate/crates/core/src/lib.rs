// SPDX-License-Identifier: Apache-2.0

pub mod codegen;
pub mod config;
pub mod emulator;
pub mod error;
pub mod eval;
pub mod improve;
pub mod llm;
pub mod pipeline;
pub mod problem;
pub mod process;
pub mod prompts;
pub mod runtime;
pub mod signal;
pub mod stimulus;
pub mod validate;
mod util;
pub mod workspace;

pub use error::{Error, Result};
pub use problem::{CircuitType, Problem};
pub use util::sha256_hex;

// SPDX-License-Identifier: Apache-2.0

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{parse_verilog_interface, ModuleInterface};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CircuitType {
    #[serde(rename = "CMB")]
    Combinational,
    #[serde(rename = "SEQ")]
    Sequential,
}

impl CircuitType {
    pub fn as_str(self) -> &'static str {
        match self {
            CircuitType::Combinational => "CMB",
            CircuitType::Sequential => "SEQ",
        }
    }
}

impl fmt::Display for CircuitType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A design to verify: natural-language spec plus its port list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Problem {
    pub id: String,
    pub spec_text: String,
    pub interface: ModuleInterface,
    pub dut_source: Option<String>,
    pub circuit_type: CircuitType,
}

#[derive(Debug, Deserialize)]
struct Meta {
    circuit_type: Option<CircuitType>,
}

impl Problem {
    pub fn new(
        id: impl Into<String>,
        spec_text: impl Into<String>,
        interface: ModuleInterface,
        dut_source: Option<String>,
    ) -> Result<Self> {
        let circuit_type = if interface.has_clock() {
            CircuitType::Sequential
        } else {
            CircuitType::Combinational
        };
        let p = Self { id: id.into(), spec_text: spec_text.into(), interface, dut_source, circuit_type };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.id.is_empty() {
            return Err(Error::BadProblem("empty problem id".into()));
        }
        if self.spec_text.trim().is_empty() {
            return Err(Error::BadProblem(format!("problem {} has an empty specification", self.id)));
        }
        let seq = self.interface.has_clock();
        if seq != (self.circuit_type == CircuitType::Sequential) {
            return Err(Error::BadProblem(format!(
                "problem {} is labelled {} but the interface {} a clock",
                self.id,
                self.circuit_type,
                if seq { "has" } else { "has no" }
            )));
        }
        Ok(())
    }

    /// Loads `<dir>/spec.txt`, `<dir>/top.v` and the optional `<dir>/meta.json`.
    pub fn load(dir: &Path) -> Result<Self> {
        let id = dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .ok_or_else(|| Error::BadProblem(format!("{} has no directory name", dir.display())))?;
        let spec_path = dir.join("spec.txt");
        let spec_text = std::fs::read_to_string(&spec_path)
            .map_err(|e| Error::BadProblem(format!("{}: {e}", spec_path.display())))?;
        let top_path = dir.join("top.v");
        let dut = std::fs::read_to_string(&top_path)
            .map_err(|e| Error::BadProblem(format!("{}: {e}", top_path.display())))?;
        let interface = parse_verilog_interface(&dut)?;
        let mut problem = Problem::new(id, spec_text, interface, Some(dut))?;

        let meta_path = dir.join("meta.json");
        if meta_path.exists() {
            let meta: Meta = serde_json::from_str(&crate::util::read_file(&meta_path)?)
                .map_err(|e| Error::BadProblem(format!("{}: {e}", meta_path.display())))?;
            if let Some(t) = meta.circuit_type {
                problem.circuit_type = t;
                problem.validate()?;
            }
        }
        Ok(problem)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::PortDecl;

    #[test]
    fn circuit_type_follows_clock() {
        let cmb = ModuleInterface::new("m", vec![PortDecl::input("a", 1), PortDecl::output("y", 1)]).unwrap();
        assert_eq!(Problem::new("p", "spec", cmb, None).unwrap().circuit_type, CircuitType::Combinational);
        let seq = ModuleInterface::new("m", vec![PortDecl::input("clk", 1), PortDecl::output("y", 1)]).unwrap();
        assert_eq!(Problem::new("p", "spec", seq, None).unwrap().circuit_type, CircuitType::Sequential);
    }

    #[test]
    fn empty_spec_rejected() {
        let i = ModuleInterface::new("m", vec![PortDecl::input("a", 1), PortDecl::output("y", 1)]).unwrap();
        assert!(matches!(Problem::new("p", "  ", i, None), Err(Error::BadProblem(_))));
    }

    #[test]
    fn load_checks_meta() {
        let dir = tempfile::tempdir().unwrap();
        let pdir = dir.path().join("and2");
        std::fs::create_dir(&pdir).unwrap();
        assert!(matches!(Problem::load(&pdir), Err(Error::BadProblem(_))));
        std::fs::write(pdir.join("spec.txt"), "AND gate").unwrap();
        std::fs::write(pdir.join("top.v"), "module top_module(input a, input b, output y); assign y = a & b; endmodule").unwrap();
        let p = Problem::load(&pdir).unwrap();
        assert_eq!(p.id, "and2");
        std::fs::write(pdir.join("meta.json"), r#"{"circuit_type": "SEQ"}"#).unwrap();
        assert!(matches!(Problem::load(&pdir), Err(Error::BadProblem(_))));
    }
}

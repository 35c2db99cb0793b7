// SPDX-License-Identifier: Apache-2.0

//! On-disk layout of a run. File names follow the pipeline's artifact names.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::util::write_file;

#[derive(Debug, Clone)]
pub struct Workspace {
    root: PathBuf,
}

impl Workspace {
    pub fn new(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        std::fs::create_dir_all(&root).map_err(|e| Error::io(&root, e))?;
        Ok(Self { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Per-problem directory. Ids containing path syntax are rejected so that
    /// every write stays under the root.
    pub fn problem(&self, id: &str) -> Result<ProblemWorkspace> {
        if id.is_empty() || id == "." || id == ".." || id.contains(['/', '\\']) {
            return Err(Error::BadProblem(format!("problem id {id:?} is not a plain directory name")));
        }
        ProblemWorkspace::new(self.root.join(id))
    }
}

#[derive(Debug, Clone)]
pub struct ProblemWorkspace {
    dir: PathBuf,
}

impl ProblemWorkspace {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn testcase_desc(&self) -> PathBuf {
        self.dir.join("Testcase_Desc.txt")
    }

    pub fn stimulus_script(&self, sample: usize) -> PathBuf {
        self.dir.join(format!("Stimuli_Gen_{sample}.py"))
    }

    pub fn input_signal(&self) -> PathBuf {
        self.dir.join("Input_signal.json")
    }

    pub fn round_dir(&self, round: usize) -> PathBuf {
        self.dir.join(format!("round_{round}"))
    }

    pub fn candidate_source(&self, round: usize, index: usize) -> PathBuf {
        self.round_dir(round).join(format!("Func_candidate_{index}.py"))
    }

    pub fn candidate_trace(&self, round: usize, index: usize) -> PathBuf {
        self.round_dir(round).join(format!("Reference_signal_candidate_{index}.json"))
    }

    pub fn candidate_error(&self, round: usize, index: usize) -> PathBuf {
        self.round_dir(round).join(format!("Func_candidate_{index}.error.txt"))
    }

    pub fn judge(&self, round: usize) -> PathBuf {
        self.round_dir(round).join("judge.json")
    }

    pub fn reference_signal(&self) -> PathBuf {
        self.dir.join("Reference_signal.json")
    }

    pub fn reference_model(&self) -> PathBuf {
        self.dir.join("Func_model.py")
    }

    pub fn sim_main(&self) -> PathBuf {
        self.dir.join("sim_main.cpp")
    }

    pub fn validate_dir(&self, round: usize) -> PathBuf {
        self.dir.join(format!("validate_{round}"))
    }

    pub fn state(&self) -> PathBuf {
        self.dir.join("state.json")
    }

    pub fn error_json(&self) -> PathBuf {
        self.dir.join("error.json")
    }

    pub fn run_meta(&self) -> PathBuf {
        self.dir.join("run_meta.json")
    }

    pub fn transcripts(&self) -> PathBuf {
        self.dir.join("transcripts")
    }

    pub fn write(&self, path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
        debug_assert!(path.starts_with(&self.dir));
        write_file(path, contents)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn confines_problem_ids() {
        let tmp = tempfile::tempdir().unwrap();
        let ws = Workspace::new(tmp.path()).unwrap();
        assert!(ws.problem("../escape").is_err());
        assert!(ws.problem("a/b").is_err());
        assert!(ws.problem("..").is_err());
        let p = ws.problem("adder").unwrap();
        assert!(p.candidate_trace(1, 3).ends_with("adder/round_1/Reference_signal_candidate_3.json"));
    }
}

// SPDX-License-Identifier: Apache-2.0

use std::path::{Path, PathBuf};
use std::sync::Arc;

use super::{Completion, PromptBundle, Provider, SamplingParams};
use crate::error::{Error, Result};
use crate::util::write_file;

/// Replays completions from `<dir>/<prompt-key>.<sample-index>.json`.
/// A missing file is an error; nothing is ever synthesized.
#[derive(Debug, Clone)]
pub struct FixtureProvider {
    dir: PathBuf,
}

impl FixtureProvider {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn path_for(dir: &Path, key: &str, sample_index: usize) -> PathBuf {
        dir.join(format!("{key}.{sample_index}.json"))
    }

    pub fn write(dir: &Path, prompt: &PromptBundle, sample_index: usize, completion: &Completion) -> Result<()> {
        let path = Self::path_for(dir, &prompt.key(), sample_index);
        write_file(&path, crate::signal::to_pretty(completion))
    }
}

impl Provider for FixtureProvider {
    fn sample(&self, prompt: &PromptBundle, _params: &SamplingParams, sample_index: usize) -> Result<Completion> {
        let key = prompt.key();
        let path = Self::path_for(&self.dir, &key, sample_index);
        let text = match std::fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                log::error!(target: "llm", "fixture miss {}", path.display());
                return Err(Error::FixtureMiss { key, sample_index });
            }
            Err(e) => return Err(Error::io(path, e)),
        };
        Ok(serde_json::from_str(&text)?)
    }

    fn name(&self) -> &str {
        "fixture"
    }
}

/// Forwards to an inner provider and stores every completion as a fixture.
pub struct RecordingProvider {
    inner: Arc<dyn Provider>,
    dir: PathBuf,
}

impl RecordingProvider {
    pub fn new(inner: Arc<dyn Provider>, dir: impl Into<PathBuf>) -> Self {
        Self { inner, dir: dir.into() }
    }
}

impl Provider for RecordingProvider {
    fn sample(&self, prompt: &PromptBundle, params: &SamplingParams, sample_index: usize) -> Result<Completion> {
        let c = self.inner.sample(prompt, params, sample_index)?;
        FixtureProvider::write(&self.dir, prompt, sample_index, &c)?;
        Ok(c)
    }

    fn name(&self) -> &str {
        "recording"
    }
}

type Responder = dyn Fn(&PromptBundle, usize) -> Result<Completion> + Send + Sync;

/// Answers from a closure. Handy for examples and for scripting judge replies.
pub struct ScriptedProvider {
    respond: Box<Responder>,
}

impl ScriptedProvider {
    pub fn new(respond: impl Fn(&PromptBundle, usize) -> Result<Completion> + Send + Sync + 'static) -> Self {
        Self { respond: Box::new(respond) }
    }
}

impl Provider for ScriptedProvider {
    fn sample(&self, prompt: &PromptBundle, _params: &SamplingParams, sample_index: usize) -> Result<Completion> {
        (self.respond)(prompt, sample_index)
    }

    fn name(&self) -> &str {
        "scripted"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::{Gateway, Stage};

    #[test]
    fn replay_identity_and_miss() {
        let dir = tempfile::tempdir().unwrap();
        let prompt = PromptBundle::new("sys", "user");
        FixtureProvider::write(dir.path(), &prompt, 0, &Completion::new("abc", 3, 4)).unwrap();

        let gw = Gateway::new(Arc::new(FixtureProvider::new(dir.path())));
        let params = SamplingParams::new(0.0, 1);
        let first = gw.complete(&prompt, &params, Stage::Stimulus).unwrap();
        assert_eq!(first[0].text, "abc");
        let second = gw.complete(&prompt, &params, Stage::Stimulus).unwrap();
        assert_eq!(first, second);

        let err = gw.complete(&prompt, &SamplingParams::new(0.0, 2), Stage::Stimulus).unwrap_err();
        assert!(matches!(err, Error::FixtureMiss { sample_index: 1, .. }));
    }

    #[test]
    fn recording_then_replay() {
        let dir = tempfile::tempdir().unwrap();
        let inner = Arc::new(ScriptedProvider::new(|p, i| Ok(Completion::new(format!("{}#{i}", p.user), 1, 2))));
        let rec = RecordingProvider::new(inner, dir.path());
        let prompt = PromptBundle::new("s", "hello");
        let params = SamplingParams::new(0.3, 3);
        let recorded: Vec<_> = (0..3).map(|i| rec.sample(&prompt, &params, i).unwrap()).collect();
        let fixture = FixtureProvider::new(dir.path());
        for (i, c) in recorded.iter().enumerate() {
            assert_eq!(&fixture.sample(&prompt, &params, i).unwrap(), c);
        }
    }
}

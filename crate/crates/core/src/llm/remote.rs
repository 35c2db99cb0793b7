// SPDX-License-Identifier: Apache-2.0

//! HTTP chat-completions provider.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{Completion, PromptBundle, Provider, SamplingParams};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemoteConfig {
    pub endpoint: String,
    pub model: String,
    /// Name of the environment variable holding the API key.
    pub api_key_env: String,
    pub timeout_s: u64,
    /// Retries after the first attempt on transport errors and 5xx replies.
    pub retries: u32,
    /// First backoff delay; doubles on every retry.
    pub backoff_ms: u64,
}

impl Default for RemoteConfig {
    fn default() -> Self {
        Self {
            endpoint: "http://127.0.0.1:8000/v1/chat/completions".into(),
            model: String::new(),
            api_key_env: "PROV_API_KEY".into(),
            timeout_s: 120,
            retries: 3,
            backoff_ms: 1000,
        }
    }
}

pub struct RemoteProvider {
    config: RemoteConfig,
    api_key: String,
    agent: ureq::Agent,
}

impl RemoteProvider {
    pub fn new(config: RemoteConfig) -> Result<Self> {
        if config.model.trim().is_empty() {
            return Err(Error::Config("provider.model must name the model to query".into()));
        }
        let api_key = std::env::var(&config.api_key_env)
            .map_err(|_| Error::Provider(format!("environment variable {} is not set", config.api_key_env)))?;
        Ok(Self::with_key(config, api_key))
    }

    pub fn with_key(config: RemoteConfig, api_key: String) -> Self {
        let agent = ureq::AgentBuilder::new()
            .timeout(Duration::from_secs(config.timeout_s))
            .build();
        Self { config, api_key, agent }
    }

    fn body(&self, prompt: &PromptBundle, params: &SamplingParams) -> Value {
        let mut messages = Vec::new();
        if !prompt.system.is_empty() {
            messages.push(json!({"role": "system", "content": prompt.system}));
        }
        for (input, output) in &prompt.few_shots {
            messages.push(json!({"role": "user", "content": input}));
            messages.push(json!({"role": "assistant", "content": output}));
        }
        messages.push(json!({"role": "user", "content": prompt.user}));
        json!({
            "model": self.config.model,
            "messages": messages,
            "temperature": params.temperature,
            "max_tokens": params.max_tokens,
        })
    }

    fn parse_reply(reply: &Value) -> Result<Completion> {
        let text = reply
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::Provider("reply has no choices[0].message.content".into()))?;
        let usage = |k: &str| reply.pointer(&format!("/usage/{k}")).and_then(Value::as_u64).unwrap_or(0);
        Ok(Completion::new(text, usage("prompt_tokens"), usage("completion_tokens")))
    }
}

impl Provider for RemoteProvider {
    fn sample(&self, prompt: &PromptBundle, params: &SamplingParams, sample_index: usize) -> Result<Completion> {
        let body = self.body(prompt, params);
        let mut delay = Duration::from_millis(self.config.backoff_ms);
        let mut attempt = 0;
        loop {
            let result = self
                .agent
                .post(&self.config.endpoint)
                .set("Authorization", &format!("Bearer {}", self.api_key))
                .send_json(body.clone());
            let failure = match result {
                Ok(resp) => {
                    let reply: Value = resp
                        .into_json()
                        .map_err(|e| Error::Provider(format!("unreadable reply: {e}")))?;
                    return Self::parse_reply(&reply);
                }
                Err(ureq::Error::Status(code, resp)) if (400..500).contains(&code) => {
                    let detail = resp.into_string().unwrap_or_default();
                    return Err(Error::Provider(format!("HTTP {code}: {detail}")));
                }
                Err(ureq::Error::Status(code, _)) => format!("HTTP {code}"),
                Err(ureq::Error::Transport(t)) => t.to_string(),
            };
            if attempt >= self.config.retries {
                return Err(Error::Provider(format!(
                    "giving up after {} attempts: {failure}",
                    attempt + 1
                )));
            }
            log::warn!(target: "llm", "sample {sample_index}: {failure}; retrying in {delay:?}");
            std::thread::sleep(delay);
            delay *= 2;
            attempt += 1;
        }
    }

    fn name(&self) -> &str {
        "remote"
    }
}

//! Client for chat-completion style HTTP endpoints.

use std::time::Duration;

use serde_json::{json, Value};

use super::{CompletionClient, LlmError};

pub const API_KEY_ENV: &str = "SUBGOAL_LLM_API_KEY";
pub const ENDPOINT_ENV: &str = "SUBGOAL_LLM_ENDPOINT";
pub const MODEL_ENV: &str = "SUBGOAL_LLM_MODEL";

#[derive(Debug, Clone, PartialEq)]
pub struct LiveConfig {
    /// Full URL of the chat-completions route.
    pub endpoint: String,
    pub model: String,
    /// Name of the environment variable holding the bearer token.
    pub api_key_env: String,
    pub timeout: Duration,
    pub temperature: f64,
}

impl LiveConfig {
    /// Endpoint and model from the environment; `None` when either is unset.
    pub fn from_env() -> Option<Self> {
        Some(LiveConfig {
            endpoint: std::env::var(ENDPOINT_ENV).ok()?,
            model: std::env::var(MODEL_ENV).ok()?,
            api_key_env: API_KEY_ENV.into(),
            timeout: Duration::from_secs(600),
            temperature: 0.0,
        })
    }
}

/// Sends each prompt as a single user message and returns the assistant text.
#[derive(Debug)]
pub struct LiveClient {
    config: LiveConfig,
    api_key: String,
    agent: ureq::Agent,
}

impl LiveClient {
    pub fn new(config: LiveConfig) -> Result<Self, LlmError> {
        let api_key = std::env::var(&config.api_key_env)
            .map_err(|_| LlmError::Config(format!("environment variable {} is not set", config.api_key_env)))?;
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .build()
            .into();
        Ok(LiveClient { config, api_key, agent })
    }
}

impl CompletionClient for LiveClient {
    fn complete(&self, prompt: &str) -> Result<String, LlmError> {
        let body = json!({
            "model": self.config.model,
            "temperature": self.config.temperature,
            "messages": [{"role": "user", "content": prompt}],
        });
        let reply: Value = self
            .agent
            .post(&self.config.endpoint)
            .header("Authorization", format!("Bearer {}", self.api_key))
            .send_json(&body)
            .map_err(|e| LlmError::Transport(e.to_string()))?
            .body_mut()
            .read_json()
            .map_err(|e| LlmError::Transport(e.to_string()))?;
        reply["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| LlmError::Transport("reply has no choices[0].message.content".into()))
    }
}

use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{GenerationBackend, LlmError, PromptRequest};
use crate::retry::RetryPolicy;

/// Chat-completions style endpoint settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct HttpBackendConfig {
    pub url: String,
    pub model: String,
    /// Environment variable holding the bearer token.
    pub token_env: Option<String>,
    pub timeout_secs: u64,
    pub max_concurrency: usize,
    pub retry: RetryPolicy,
}

impl Default for HttpBackendConfig {
    fn default() -> Self {
        Self {
            url: "http://127.0.0.1:8080/v1/chat/completions".into(),
            model: "codellama-schema-annotator".into(),
            token_env: Some("SCHEMA_ANNOTATOR_API_KEY".into()),
            timeout_secs: 60,
            max_concurrency: 4,
            retry: RetryPolicy::default(),
        }
    }
}

struct Gate {
    free: Mutex<usize>,
    freed: Condvar,
}

impl Gate {
    fn new(n: usize) -> Self {
        Self { free: Mutex::new(n.max(1)), freed: Condvar::new() }
    }

    fn enter(&self) -> GateGuard<'_> {
        let mut free = self.free.lock().unwrap_or_else(|p| p.into_inner());
        while *free == 0 {
            free = self.freed.wait(free).unwrap_or_else(|p| p.into_inner());
        }
        *free -= 1;
        GateGuard(self)
    }
}

struct GateGuard<'a>(&'a Gate);

impl Drop for GateGuard<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap_or_else(|p| p.into_inner()) += 1;
        self.0.freed.notify_one();
    }
}

enum Attempt {
    Transient(String),
    Fatal(LlmError),
}

pub struct HttpBackend {
    config: HttpBackendConfig,
    agent: ureq::Agent,
    token: Option<String>,
    gate: Gate,
}

impl HttpBackend {
    pub fn new(config: HttpBackendConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(config.timeout_secs.max(1))))
            .build()
            .new_agent();
        let token = config.token_env.as_deref().and_then(|var| std::env::var(var).ok());
        let gate = Gate::new(config.max_concurrency);
        Self { config, agent, token, gate }
    }

    pub fn body(&self, request: &PromptRequest) -> Value {
        json!({
            "model": self.config.model,
            "messages": [
                {"role": "system", "content": request.instruction},
                {"role": "user", "content": request.input},
            ],
            "temperature": request.temperature,
            "max_tokens": request.max_output_tokens,
        })
    }

    fn attempt(&self, body: &Value) -> Result<String, Attempt> {
        let _slot = self.gate.enter();
        let mut call = self.agent.post(&self.config.url).header("Content-Type", "application/json");
        if let Some(token) = &self.token {
            call = call.header("Authorization", format!("Bearer {token}"));
        }
        let response = call.send_json(body).map_err(|e| Attempt::Transient(e.to_string()))?;
        let status = response.status().as_u16();
        let text = response.into_body().read_to_string().map_err(|e| Attempt::Transient(e.to_string()))?;
        match status {
            200..=299 => extract_content(&text).map_err(Attempt::Fatal),
            401 | 403 => Err(Attempt::Fatal(LlmError::Auth(status))),
            429 | 500..=599 => Err(Attempt::Transient(format!("HTTP {status}"))),
            _ => Err(Attempt::Fatal(LlmError::Http { status, body: text.chars().take(200).collect() })),
        }
    }
}

fn extract_content(body: &str) -> Result<String, LlmError> {
    let value: Value = serde_json::from_str(body).map_err(|e| LlmError::Malformed(e.to_string()))?;
    value
        .pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| LlmError::Malformed("missing choices[0].message.content".into()))
}

impl GenerationBackend for HttpBackend {
    fn identity(&self) -> String {
        format!("http:{}", self.config.model)
    }

    fn complete(&self, request: &PromptRequest) -> Result<String, LlmError> {
        let body = self.body(request);
        self.config.retry.run(|| self.attempt(&body), |e| matches!(e, Attempt::Transient(_))).map_err(
            |(e, attempts)| match e {
                Attempt::Transient(message) => LlmError::Transport { attempts, message },
                Attempt::Fatal(e) => e,
            },
        )
    }
}

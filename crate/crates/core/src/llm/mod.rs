//! Chat-completion backends and LLM-driven policy, critic and refiner.

mod agents;
mod parse;
mod prompts;

pub use agents::{LlmCritic, LlmPolicy, LlmRefiner};
pub use parse::{first_fenced_block, parse_action_tag, parse_critic_response, ParseError};
pub use prompts::{render, render_prompt, TemplateId};

use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

pub const API_KEY_ENV: &str = "PROCEED_API_KEY";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LlmError {
    #[error("request timed out")]
    Timeout,
    #[error("HTTP status {0}")]
    HttpError(u16),
    #[error("rate limited")]
    RateLimited,
    #[error("gave up after {attempts} attempts: {last}")]
    ExhaustedRetries { attempts: u32, last: String },
    #[error("transport: {0}")]
    Transport(String),
    #[error("unexpected response: {0}")]
    BadResponse(String),
    #[error("missing binding {{{0}}}")]
    MissingBinding(String),
    #[error("unexpected binding {0:?}")]
    UnexpectedBinding(String),
    #[error("unknown template {0:?}")]
    UnknownTemplate(String),
}

impl LlmError {
    fn retryable(&self) -> bool {
        match self {
            LlmError::Timeout | LlmError::RateLimited | LlmError::Transport(_) => true,
            LlmError::HttpError(s) => *s >= 500,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        Self {
            role: Role::System,
            content: content.into(),
        }
    }
    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: Role::User,
            content: content.into(),
        }
    }
    pub fn assistant(content: impl Into<String>) -> Self {
        Self {
            role: Role::Assistant,
            content: content.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_units: u64,
    pub completion_units: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Completion {
    pub text: String,
    pub usage: Usage,
}

/// Anything that turns a message list into a completion.
pub trait ChatBackend: Send + Sync {
    fn complete(&self, messages: &[ChatMessage]) -> Result<Completion, LlmError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LlmConfig {
    pub endpoint_url: String,
    pub model_name: String,
    pub temperature: f64,
    pub top_p: f64,
    pub max_tokens: u32,
    /// Retries after the first attempt.
    pub max_retries: u32,
    pub backoff_base_ms: u64,
    pub timeout_secs: u64,
    pub max_in_flight: usize,
}

impl Default for LlmConfig {
    fn default() -> Self {
        Self {
            endpoint_url: "http://localhost:8000/v1/chat/completions".into(),
            model_name: "default".into(),
            temperature: 0.7,
            top_p: 1.0,
            max_tokens: 4096,
            max_retries: 3,
            backoff_base_ms: 500,
            timeout_secs: 120,
            max_in_flight: 8,
        }
    }
}

/// Counting semaphore bounding concurrent requests.
struct InFlight {
    count: Mutex<usize>,
    freed: Condvar,
    limit: usize,
}

struct Permit<'a>(&'a InFlight);

impl InFlight {
    fn new(limit: usize) -> Self {
        Self {
            count: Mutex::new(0),
            freed: Condvar::new(),
            limit: limit.max(1),
        }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut n = self.count.lock().expect("in-flight lock");
        while *n >= self.limit {
            n = self.freed.wait(n).expect("in-flight lock");
        }
        *n += 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut n = self.0.count.lock().expect("in-flight lock");
        *n -= 1;
        self.0.freed.notify_one();
    }
}

/// JSON-over-HTTP chat-completion client with retries and a concurrency cap.
pub struct HttpBackend {
    config: LlmConfig,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
    in_flight: InFlight,
}

impl HttpBackend {
    /// Reads the API key from `PROCEED_API_KEY` if set.
    pub fn new(config: LlmConfig) -> Result<Self, LlmError> {
        let api_key = std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty());
        Self::with_key(config, api_key)
    }

    pub fn with_key(config: LlmConfig, api_key: Option<String>) -> Result<Self, LlmError> {
        if config.max_tokens == 0 {
            return Err(LlmError::BadResponse("max_tokens must be at least 1".into()));
        }
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| LlmError::Transport(e.to_string()))?;
        Ok(Self {
            in_flight: InFlight::new(config.max_in_flight),
            config,
            api_key,
            client,
        })
    }

    pub fn config(&self) -> &LlmConfig {
        &self.config
    }

    fn request_body(&self, messages: &[ChatMessage]) -> Value {
        json!({
            "model": self.config.model_name,
            "messages": messages,
            "temperature": self.config.temperature,
            "top_p": self.config.top_p,
            "max_tokens": self.config.max_tokens,
        })
    }

    fn attempt(&self, body: &Value) -> Result<Completion, LlmError> {
        let _permit = self.in_flight.acquire();
        let mut req = self.client.post(&self.config.endpoint_url).json(body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| {
            if e.is_timeout() {
                LlmError::Timeout
            } else {
                LlmError::Transport(e.to_string())
            }
        })?;
        let status = resp.status().as_u16();
        if status == 429 {
            return Err(LlmError::RateLimited);
        }
        if !(200..300).contains(&status) {
            return Err(LlmError::HttpError(status));
        }
        let value: Value = resp.json().map_err(|e| {
            if e.is_timeout() {
                LlmError::Timeout
            } else {
                LlmError::BadResponse(e.to_string())
            }
        })?;
        parse_completion(&value)
    }
}

/// Reads `choices[0].message.content` and `usage`.
pub fn parse_completion(value: &Value) -> Result<Completion, LlmError> {
    let text = value
        .pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .ok_or_else(|| LlmError::BadResponse("missing choices[0].message.content".into()))?;
    let units = |k: &str| value.pointer(&format!("/usage/{k}")).and_then(Value::as_u64).unwrap_or(0);
    Ok(Completion {
        text: text.to_string(),
        usage: Usage {
            prompt_units: units("prompt_tokens"),
            completion_units: units("completion_tokens"),
        },
    })
}

impl ChatBackend for HttpBackend {
    fn complete(&self, messages: &[ChatMessage]) -> Result<Completion, LlmError> {
        let body = self.request_body(messages);
        let mut attempts = 0;
        loop {
            attempts += 1;
            match self.attempt(&body) {
                Ok(c) => return Ok(c),
                Err(e) if e.retryable() => {
                    if attempts > self.config.max_retries {
                        return Err(LlmError::ExhaustedRetries {
                            attempts,
                            last: e.to_string(),
                        });
                    }
                    let wait = self.config.backoff_base_ms.saturating_mul(1 << (attempts - 1).min(16));
                    log::warn!("backend attempt {attempts} failed ({e}); retrying in {wait} ms");
                    std::thread::sleep(Duration::from_millis(wait));
                }
                Err(e) => return Err(e),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn completion_fields() {
        let v = json!({"choices": [{"message": {"role": "assistant", "content": "hi"}}],
                       "usage": {"prompt_tokens": 12, "completion_tokens": 3}});
        let c = parse_completion(&v).unwrap();
        assert_eq!(c.text, "hi");
        assert_eq!(c.usage, Usage { prompt_units: 12, completion_units: 3 });
        assert!(parse_completion(&json!({})).is_err());
    }

    #[test]
    fn request_body_wire_fields() {
        let b = HttpBackend::with_key(LlmConfig::default(), None).unwrap();
        let body = b.request_body(&[ChatMessage::user("x")]);
        assert_eq!(body["messages"][0]["role"], "user");
        assert_eq!(body["temperature"], 0.7);
        assert_eq!(body["top_p"], 1.0);
        assert_eq!(body["max_tokens"], 4096);
    }
}

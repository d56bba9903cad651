//! HTTP backend for chat-completions-compatible endpoints.
//!
//! POSTs `{model, messages, temperature, max_tokens}` to
//! `<base_url>/chat/completions` with a bearer key read from an environment
//! variable. Transport failures and retryable statuses (429, 5xx) back off
//! exponentially with jitter; authentication and other provider errors
//! surface immediately with their payload.

use std::time::Duration;

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::client::{Backend, ChatRequest, ChatResponse, TokenUsage};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub initial_backoff_ms: u64,
    pub multiplier: f64,
    pub jitter: bool,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 5,
            initial_backoff_ms: 1000,
            multiplier: 2.0,
            jitter: true,
        }
    }
}

impl RetryPolicy {
    /// Delay before retry number `attempt` (1-based). With jitter the delay
    /// is scaled uniformly into [0.5, 1.0] of the nominal value.
    fn delay(&self, attempt: u32) -> Duration {
        let nominal =
            self.initial_backoff_ms as f64 * self.multiplier.powi(attempt.saturating_sub(1) as i32);
        let scaled = if self.jitter {
            nominal * rand::rng().random_range(0.5..=1.0)
        } else {
            nominal
        };
        Duration::from_millis(scaled as u64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HttpSettings {
    pub base_url: String,
    pub model: String,
    /// Name of the environment variable holding the bearer key.
    pub api_key_env: String,
    #[serde(default)]
    pub retry: RetryPolicy,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
}

fn default_timeout_secs() -> u64 {
    120
}

impl Default for HttpSettings {
    fn default() -> Self {
        HttpSettings {
            base_url: "https://api.openai.com/v1".into(),
            model: "gpt-4".into(),
            api_key_env: "OPENAI_API_KEY".into(),
            retry: RetryPolicy::default(),
            timeout_secs: default_timeout_secs(),
        }
    }
}

#[derive(Deserialize)]
struct CompletionMessage {
    content: Option<String>,
}

#[derive(Deserialize)]
struct CompletionChoice {
    message: CompletionMessage,
}

#[derive(Deserialize)]
struct CompletionPayload {
    choices: Vec<CompletionChoice>,
    usage: Option<TokenUsage>,
}

pub struct HttpBackend {
    settings: HttpSettings,
    api_key: String,
    agent: ureq::Agent,
}

impl HttpBackend {
    pub fn new(settings: HttpSettings) -> Result<HttpBackend> {
        let api_key = std::env::var(&settings.api_key_env)
            .map_err(|_| Error::MissingApiKey(settings.api_key_env.clone()))?;
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(settings.timeout_secs)))
            .build()
            .new_agent();
        Ok(HttpBackend {
            settings,
            api_key,
            agent,
        })
    }

    fn endpoint(&self) -> String {
        format!(
            "{}/chat/completions",
            self.settings.base_url.trim_end_matches('/')
        )
    }

    fn attempt(&self, request: &ChatRequest) -> std::result::Result<ChatResponse, AttemptError> {
        let body = json!({
            "model": request.model_id,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        });
        let mut response = self
            .agent
            .post(&self.endpoint())
            .header("Authorization", &format!("Bearer {}", self.api_key))
            .send_json(&body)
            .map_err(|e| AttemptError::Retryable(e.to_string()))?;

        let status = response.status().as_u16();
        if status == 401 || status == 403 {
            let body = response.body_mut().read_to_string().unwrap_or_default();
            return Err(AttemptError::Fatal(Error::Auth { status, body }));
        }
        if status == 429 || status >= 500 {
            let body = response.body_mut().read_to_string().unwrap_or_default();
            return Err(AttemptError::Retryable(format!("status {status}: {body}")));
        }
        if status >= 400 {
            let body = response.body_mut().read_to_string().unwrap_or_default();
            return Err(AttemptError::Fatal(Error::Provider { status, body }));
        }

        let payload: CompletionPayload = response
            .body_mut()
            .read_json()
            .map_err(|e| AttemptError::Fatal(Error::BadResponse(e.to_string())))?;
        let text = payload
            .choices
            .first()
            .and_then(|c| c.message.content.clone())
            .unwrap_or_default();
        Ok(ChatResponse {
            text,
            model_id: request.model_id.clone(),
            usage: payload.usage,
            cached: false,
        })
    }
}

enum AttemptError {
    Retryable(String),
    Fatal(Error),
}

impl Backend for HttpBackend {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse> {
        let policy = &self.settings.retry;
        let mut last = String::new();
        for attempt in 1..=policy.max_attempts {
            match self.attempt(request) {
                Ok(response) => return Ok(response),
                Err(AttemptError::Fatal(e)) => return Err(e),
                Err(AttemptError::Retryable(reason)) => {
                    last = reason;
                    if attempt < policy.max_attempts {
                        std::thread::sleep(policy.delay(attempt));
                    }
                }
            }
        }
        Err(Error::Transport {
            attempts: policy.max_attempts,
            last,
        })
    }

    fn id(&self) -> &str {
        "http"
    }
}

//! Pluggable chat-completion backend with response caching.
//!
//! Two backends implement the same [`Backend`] trait: an HTTP client for
//! chat-completions-compatible endpoints and a seeded parametric simulator.
//! [`ModelClient`] fronts either with an optional JSON-Lines cache, so
//! repeated runs replay recorded replies instead of re-issuing calls.

mod cache;
mod http;
mod simulator;

pub use cache::{Lookup, RequestSummary, ResponseCache};
pub use http::{HttpBackend, HttpSettings, RetryPolicy};
pub use simulator::{standard_normal_cdf, CertaintyLaw, SimulatorBackend, SimulatorProfile};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// One chat-completion request. `sample_index` distinguishes repeated
/// stochastic draws of the same prompt for caching.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model_id: String,
    pub prompt: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub sample_index: u32,
}

impl ChatRequest {
    pub fn new(
        model_id: impl Into<String>,
        prompt: impl Into<String>,
        temperature: f64,
        max_tokens: u32,
    ) -> Result<ChatRequest> {
        let prompt = prompt.into();
        if prompt.is_empty() {
            return Err(Error::Invalid {
                what: "chat request",
                reason: "prompt is empty".into(),
            });
        }
        if !(0.0..=2.0).contains(&temperature) {
            return Err(Error::OutOfRange {
                what: "temperature",
                value: temperature,
                low: 0.0,
                high: 2.0,
            });
        }
        if max_tokens == 0 {
            return Err(Error::Invalid {
                what: "chat request",
                reason: "max_tokens must be positive".into(),
            });
        }
        Ok(ChatRequest {
            model_id: model_id.into(),
            prompt,
            temperature,
            max_tokens,
            sample_index: 0,
        })
    }

    pub fn with_sample_index(mut self, sample_index: u32) -> ChatRequest {
        self.sample_index = sample_index;
        self
    }

    pub fn prompt_sha256(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.prompt.as_bytes());
        hex(&hasher.finalize())
    }

    /// Cache key: (model, prompt hash, temperature, sample index).
    pub fn cache_key(&self) -> String {
        format!(
            "{}:{}:{:?}:{}",
            self.model_id,
            self.prompt_sha256(),
            self.temperature,
            self.sample_index
        )
    }

    fn summary(&self) -> RequestSummary {
        RequestSummary {
            model_id: self.model_id.clone(),
            prompt_sha256: self.prompt_sha256(),
            temperature: self.temperature,
            sample_index: self.sample_index,
        }
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenUsage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub total_tokens: u64,
}

/// A completion, possibly served from the cache.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatResponse {
    pub text: String,
    pub model_id: String,
    pub usage: Option<TokenUsage>,
    pub cached: bool,
}

/// A chat-completion provider. Implementations must be callable from
/// multiple concurrent workers.
pub trait Backend: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse>;

    /// Short identifier for manifests and logs.
    fn id(&self) -> &str;
}

/// Backend plus optional response cache.
pub struct ModelClient {
    backend: Box<dyn Backend>,
    cache: Option<ResponseCache>,
}

impl ModelClient {
    pub fn new(backend: Box<dyn Backend>) -> ModelClient {
        ModelClient {
            backend,
            cache: None,
        }
    }

    pub fn with_cache(backend: Box<dyn Backend>, cache: ResponseCache) -> ModelClient {
        ModelClient {
            backend,
            cache: Some(cache),
        }
    }

    pub fn backend_id(&self) -> &str {
        self.backend.id()
    }

    pub fn cache(&self) -> Option<&ResponseCache> {
        self.cache.as_ref()
    }

    /// Complete a request, consulting the cache first. At most one backend
    /// call is issued per cache key across the process lifetime.
    pub fn complete(&self, request: &ChatRequest) -> Result<ChatResponse> {
        let Some(cache) = &self.cache else {
            return self.backend.complete(request);
        };
        match cache.lookup(&request.cache_key()) {
            Lookup::Hit(text) => Ok(ChatResponse {
                text,
                model_id: request.model_id.clone(),
                usage: None,
                cached: true,
            }),
            Lookup::Fetch(claim) => {
                let response = self.backend.complete(request)?;
                cache.fulfill(claim, &request.summary(), &response.text)?;
                Ok(response)
            }
        }
    }

    /// Draw `k` completions of the same prompt with sample indices 0..k,
    /// returned in index order. A per-sample failure aborts with the
    /// failing index attached; use [`ModelClient::sample_k_each`] to apply
    /// a skip policy instead.
    pub fn sample_k(&self, base: &ChatRequest, k: usize) -> Result<Vec<ChatResponse>> {
        self.sample_k_each(base, k)
            .into_iter()
            .enumerate()
            .map(|(index, r)| {
                r.map_err(|e| Error::Sample {
                    index,
                    source: Box::new(e),
                })
            })
            .collect()
    }

    /// Like [`ModelClient::sample_k`] but yields every per-sample outcome
    /// so the caller can choose skip-or-abort.
    pub fn sample_k_each(&self, base: &ChatRequest, k: usize) -> Vec<Result<ChatResponse>> {
        (0..k)
            .map(|i| self.complete(&base.clone().with_sample_index(i as u32)))
            .collect()
    }
}

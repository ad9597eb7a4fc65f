//! Uniform access to chat-completion backends: live HTTP, recorded replay,
//! and a deterministic mock. The gateway caps in-flight requests and leaves
//! retrying to the backend that actually talks to a network.

mod http;
mod mock;
mod replay;

pub use http::HttpBackend;
pub use mock::{planted_label, MockBackend};
pub use replay::{record, Fixture, ReplayBackend};

use std::path::PathBuf;
use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// One ordered piece of request content.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ContentPart {
    Text(String),
    ImagePng(Vec<u8>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChatRequest {
    pub model_id: String,
    pub parts: Vec<ContentPart>,
    pub temperature: f64,
    pub max_tokens: u32,
    /// Caller-supplied label used when persisting artifacts.
    pub request_tag: String,
}

impl ChatRequest {
    pub fn text(text: impl Into<String>, model_id: impl Into<String>) -> Self {
        Self {
            model_id: model_id.into(),
            parts: vec![ContentPart::Text(text.into())],
            temperature: 0.0,
            max_tokens: 1024,
            request_tag: String::new(),
        }
    }

    pub fn validate(&self, backend: &dyn ChatBackend) -> Result<()> {
        if !self.parts.iter().any(|p| matches!(p, ContentPart::Text(_))) {
            return Err(Error::InvalidConfig(
                "chat request needs at least one text part".into(),
            ));
        }
        if !(self.temperature >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "temperature must be >= 0, got {}",
                self.temperature
            )));
        }
        let has_image = self.parts.iter().any(|p| matches!(p, ContentPart::ImagePng(_)));
        if has_image && !backend.supports_images() {
            return Err(Error::InvalidConfig(format!(
                "backend '{}' does not accept image parts",
                backend.id()
            )));
        }
        Ok(())
    }

    /// Concatenated text parts.
    pub fn joined_text(&self) -> String {
        let mut out = String::new();
        for p in &self.parts {
            if let ContentPart::Text(t) = p {
                out.push_str(t);
            }
        }
        out
    }

    /// Stable content digest over model id, temperature, and every part in
    /// order (image bytes included). Used as the replay fixture key.
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.model_id.as_bytes());
        hasher.update([0u8]);
        hasher.update(self.temperature.to_bits().to_le_bytes());
        for part in &self.parts {
            match part {
                ContentPart::Text(t) => {
                    hasher.update([b'T']);
                    hasher.update((t.len() as u64).to_le_bytes());
                    hasher.update(t.as_bytes());
                }
                ContentPart::ImagePng(bytes) => {
                    hasher.update([b'I']);
                    hasher.update((bytes.len() as u64).to_le_bytes());
                    hasher.update(bytes);
                }
            }
        }
        hex::encode(hasher.finalize())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenUsage {
    pub prompt_tokens: u32,
    pub completion_tokens: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChatResponse {
    pub text: String,
    pub token_usage: Option<TokenUsage>,
    pub backend_id: String,
    pub latency: Duration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_delay_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 3,
            base_delay_ms: 250,
        }
    }
}

impl RetryPolicy {
    /// Exponential backoff; strictly increasing in the attempt number.
    pub fn delay(&self, attempt: u32) -> Duration {
        Duration::from_millis(self.base_delay_ms.saturating_mul(1u64 << attempt.min(16)))
    }
}

/// Which backend to build and how to bound it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "backend", rename_all = "lowercase")]
pub enum BackendKind {
    Http {
        endpoint: String,
        /// Name of the environment variable holding the API key.
        auth_env: String,
    },
    Replay { fixture_dir: PathBuf },
    Mock {
        #[serde(default)]
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendConfig {
    #[serde(flatten)]
    pub kind: BackendKind,
    #[serde(default = "default_concurrency")]
    pub max_concurrency: usize,
    #[serde(default)]
    pub retry: RetryPolicy,
}

fn default_concurrency() -> usize {
    4
}

pub trait ChatBackend: Send + Sync {
    fn id(&self) -> &str;
    fn supports_images(&self) -> bool;
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse>;
}

/// Counting semaphore; permits are released when the guard drops.
struct Semaphore {
    available: Mutex<usize>,
    signal: Condvar,
}

struct Permit<'a>(&'a Semaphore);

impl Semaphore {
    fn new(permits: usize) -> Self {
        Self {
            available: Mutex::new(permits),
            signal: Condvar::new(),
        }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut n = self.available.lock().unwrap();
        while *n == 0 {
            n = self.signal.wait(n).unwrap();
        }
        *n -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.available.lock().unwrap() += 1;
        self.0.signal.notify_one();
    }
}

/// Shared entry point for all completion traffic.
pub struct Gateway {
    backend: Box<dyn ChatBackend>,
    gate: Semaphore,
    max_concurrency: usize,
}

impl Gateway {
    pub fn new(backend: Box<dyn ChatBackend>, max_concurrency: usize) -> Result<Self> {
        if max_concurrency == 0 {
            return Err(Error::InvalidConfig("max_concurrency must be >= 1".into()));
        }
        Ok(Self {
            backend,
            gate: Semaphore::new(max_concurrency),
            max_concurrency,
        })
    }

    /// Builds the configured backend, failing fast on missing credentials.
    pub fn from_config(cfg: &BackendConfig) -> Result<Self> {
        let backend: Box<dyn ChatBackend> = match &cfg.kind {
            BackendKind::Http { endpoint, auth_env } => {
                Box::new(HttpBackend::new(endpoint.clone(), auth_env, cfg.retry.clone())?)
            }
            BackendKind::Replay { fixture_dir } => {
                Box::new(ReplayBackend::new(fixture_dir.clone()))
            }
            BackendKind::Mock { seed } => Box::new(MockBackend::new(*seed)),
        };
        Self::new(backend, cfg.max_concurrency)
    }

    pub fn backend_id(&self) -> &str {
        self.backend.id()
    }

    pub fn max_concurrency(&self) -> usize {
        self.max_concurrency
    }

    pub fn supports_images(&self) -> bool {
        self.backend.supports_images()
    }

    pub fn complete(&self, request: &ChatRequest) -> Result<ChatResponse> {
        request.validate(self.backend.as_ref())?;
        let _permit = self.gate.acquire();
        let response = self.backend.complete(request)?;
        if response.text.trim().is_empty() {
            return Err(Error::EmptyCompletion {
                backend: self.backend.id().to_string(),
            });
        }
        Ok(response)
    }
}

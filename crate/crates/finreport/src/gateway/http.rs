//! OpenAI-style chat-completions HTTP backend.
//!
//! Wire shape: POST `{endpoint}` with a `messages` array holding one user
//! message whose content is a list of `text` and base64 `image_url` parts.
//! Transient failures (timeouts, connection errors, 429, 5xx) are retried
//! with exponential backoff; anything else surfaces immediately.

use std::time::{Duration, Instant};

use base64::Engine;
use serde::Deserialize;
use serde_json::json;

use super::{ChatBackend, ChatRequest, ChatResponse, ContentPart, RetryPolicy, TokenUsage};
use crate::error::{Error, Result};

pub struct HttpBackend {
    client: reqwest::blocking::Client,
    endpoint: String,
    api_key: String,
    retry: RetryPolicy,
}

impl HttpBackend {
    /// Reads the API key from the named environment variable; a missing
    /// variable is a configuration error raised before any request is sent.
    pub fn new(endpoint: String, auth_env: &str, retry: RetryPolicy) -> Result<Self> {
        let api_key = std::env::var(auth_env).map_err(|_| {
            Error::InvalidConfig(format!(
                "environment variable {auth_env} (API credential) is not set"
            ))
        })?;
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(120))
            .build()
            .map_err(|e| Error::Backend {
                backend: "http".into(),
                message: format!("client construction failed: {e}"),
            })?;
        Ok(Self {
            client,
            endpoint,
            api_key,
            retry,
        })
    }

    fn body(&self, request: &ChatRequest) -> serde_json::Value {
        let content: Vec<serde_json::Value> = request
            .parts
            .iter()
            .map(|part| match part {
                ContentPart::Text(t) => json!({ "type": "text", "text": t }),
                ContentPart::ImagePng(bytes) => {
                    let b64 = base64::engine::general_purpose::STANDARD.encode(bytes);
                    json!({
                        "type": "image_url",
                        "image_url": { "url": format!("data:image/png;base64,{b64}") }
                    })
                }
            })
            .collect();
        json!({
            "model": request.model_id,
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
            "messages": [ { "role": "user", "content": content } ],
        })
    }
}

#[derive(Deserialize)]
struct ApiResponse {
    choices: Vec<ApiChoice>,
    usage: Option<ApiUsage>,
}

#[derive(Deserialize)]
struct ApiChoice {
    message: ApiMessage,
}

#[derive(Deserialize)]
struct ApiMessage {
    content: Option<String>,
}

#[derive(Deserialize)]
struct ApiUsage {
    prompt_tokens: u32,
    completion_tokens: u32,
}

enum Attempt {
    Done(ChatResponse),
    Transient(String),
    Fatal(Error),
}

impl ChatBackend for HttpBackend {
    fn id(&self) -> &str {
        "http"
    }

    fn supports_images(&self) -> bool {
        true
    }

    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse> {
        let body = self.body(request);
        let mut last_transient = String::new();
        for attempt in 0..self.retry.max_attempts.max(1) {
            if attempt > 0 {
                std::thread::sleep(self.retry.delay(attempt - 1));
            }
            match self.try_once(&body) {
                Attempt::Done(resp) => return Ok(resp),
                Attempt::Fatal(err) => return Err(err),
                Attempt::Transient(msg) => last_transient = msg,
            }
        }
        Err(Error::Backend {
            backend: "http".into(),
            message: format!(
                "gave up after {} attempts: {last_transient}",
                self.retry.max_attempts.max(1)
            ),
        })
    }
}

impl HttpBackend {
    fn try_once(&self, body: &serde_json::Value) -> Attempt {
        let started = Instant::now();
        let sent = self
            .client
            .post(&self.endpoint)
            .bearer_auth(&self.api_key)
            .json(body)
            .send();
        let response = match sent {
            Ok(r) => r,
            Err(e) if e.is_timeout() || e.is_connect() => {
                return Attempt::Transient(format!("network: {e}"))
            }
            Err(e) => {
                return Attempt::Fatal(Error::Backend {
                    backend: "http".into(),
                    message: e.to_string(),
                })
            }
        };
        let status = response.status();
        if status.as_u16() == 429 || status.is_server_error() {
            return Attempt::Transient(format!("status {status}"));
        }
        if !status.is_success() {
            let detail = response.text().unwrap_or_default();
            return Attempt::Fatal(Error::Backend {
                backend: "http".into(),
                message: format!("status {status}: {detail}"),
            });
        }
        let parsed: ApiResponse = match response.json() {
            Ok(p) => p,
            Err(e) => {
                return Attempt::Fatal(Error::Backend {
                    backend: "http".into(),
                    message: format!("malformed response body: {e}"),
                })
            }
        };
        let text = parsed
            .choices
            .first()
            .and_then(|c| c.message.content.clone())
            .unwrap_or_default();
        if text.trim().is_empty() {
            return Attempt::Fatal(Error::EmptyCompletion {
                backend: "http".into(),
            });
        }
        Attempt::Done(ChatResponse {
            text,
            token_usage: parsed.usage.map(|u| TokenUsage {
                prompt_tokens: u.prompt_tokens,
                completion_tokens: u.completion_tokens,
            }),
            backend_id: "http".into(),
            latency: started.elapsed(),
        })
    }
}

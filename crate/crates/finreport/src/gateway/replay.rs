//! Record/replay fixtures keyed by request digest.

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{ChatBackend, ChatRequest, ChatResponse};
use crate::error::{Error, Result};

/// One recorded exchange, stored as `<digest>.json` in the fixture directory.
/// The request text is kept for human inspection; only the digest is used for
/// lookup.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Fixture {
    pub digest: String,
    pub model_id: String,
    pub request_tag: String,
    pub request_text: String,
    pub response_text: String,
}

pub struct ReplayBackend {
    dir: PathBuf,
}

impl ReplayBackend {
    pub fn new(dir: PathBuf) -> Self {
        Self { dir }
    }
}

impl ChatBackend for ReplayBackend {
    fn id(&self) -> &str {
        "replay"
    }

    fn supports_images(&self) -> bool {
        true
    }

    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse> {
        let digest = request.digest();
        let path = self.dir.join(format!("{digest}.json"));
        if !path.exists() {
            return Err(Error::FixtureNotFound { digest });
        }
        let content = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let fixture: Fixture = serde_json::from_str(&content).map_err(|e| Error::Backend {
            backend: "replay".into(),
            message: format!("corrupt fixture {}: {e}", path.display()),
        })?;
        Ok(ChatResponse {
            text: fixture.response_text,
            token_usage: None,
            backend_id: "replay".into(),
            latency: Duration::ZERO,
        })
    }
}

/// Persists a response under the request's digest so a later replay of the
/// same request returns it verbatim.
pub fn record(dir: &Path, request: &ChatRequest, response: &ChatResponse) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let digest = request.digest();
    let fixture = Fixture {
        digest: digest.clone(),
        model_id: request.model_id.clone(),
        request_tag: request.request_tag.clone(),
        request_text: request.joined_text(),
        response_text: response.text.clone(),
    };
    let path = dir.join(format!("{digest}.json"));
    let json = serde_json::to_string_pretty(&fixture).expect("serializable fixture");
    std::fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

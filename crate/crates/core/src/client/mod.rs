//! External model endpoints and the transcript layer every call goes through.
//!
//! Four endpoint kinds exist: a text/vision chat model, an embedding model, an
//! image generator and an online image source. Each is a trait so tests and
//! offline runs can substitute [`replay::Replay`] or the doubles in [`mock`].
//! Calls are made through [`Gateway`], which applies the retry policy and
//! writes exactly one [`ModelTranscript`] per attempt.

pub mod http;
pub mod mock;
pub mod replay;
mod transcript;

use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

pub use transcript::{CallKind, ModelTranscript, TranscriptLog};

#[derive(Debug, Clone, thiserror::Error)]
pub enum ClientError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("endpoint returned status {code}: {body}")]
    Status { code: u16, body: String },
    #[error("malformed response: {0}")]
    Malformed(String),
    #[error("no recorded response for request {0}")]
    ReplayMiss(String),
    #[error("client not configured: {0}")]
    Config(String),
    #[error("timed out after {0:?}")]
    Timeout(Duration),
}

impl ClientError {
    /// Whether a retry could plausibly succeed.
    pub fn is_transient(&self) -> bool {
        match self {
            ClientError::Transport(_) | ClientError::Timeout(_) => true,
            ClientError::Status { code, .. } => *code == 429 || *code >= 500,
            _ => false,
        }
    }
}

/// An image handed to a model: a local path / URL, or inline bytes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImageInput {
    Ref(String),
    Inline { mime: String, data_base64: String },
}

/// Request to a text (optionally vision) model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelRequest {
    pub prompt: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image: Option<ImageInput>,
}

impl ModelRequest {
    pub fn text(prompt: impl Into<String>) -> ModelRequest {
        ModelRequest { prompt: prompt.into(), image: None }
    }

    pub fn with_image(prompt: impl Into<String>, image: ImageInput) -> ModelRequest {
        ModelRequest { prompt: prompt.into(), image: Some(image) }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageRequest {
    pub prompt: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<ImageInput>,
    pub n: usize,
}

/// Output of an image generator.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratedImage {
    Bytes { mime: String, data_base64: String },
    Url(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OnlineImage {
    pub image_url: String,
    pub title: String,
    pub source_url: String,
}

pub trait TextModel: Send + Sync {
    fn endpoint_id(&self) -> &str;
    fn complete(&self, request: &ModelRequest) -> Result<String, ClientError>;
}

pub trait Embedder: Send + Sync {
    fn endpoint_id(&self) -> &str;
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f32>>, ClientError>;
}

pub trait ImageGenerator: Send + Sync {
    fn endpoint_id(&self) -> &str;
    fn generate(&self, request: &ImageRequest) -> Result<Vec<GeneratedImage>, ClientError>;
}

pub trait OnlineSource: Send + Sync {
    fn endpoint_id(&self) -> &str;
    fn search(&self, query: &str, limit: usize) -> Result<Vec<OnlineImage>, ClientError>;
}

/// Retry with exponential backoff: `retries` extra attempts after the first,
/// sleeping `base_delay · 2^i` before retry `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub retries: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy { retries: 3, base_delay: Duration::from_millis(500) }
    }
}

impl RetryPolicy {
    /// Same retry count, no sleeping. Used by tests.
    pub fn immediate() -> RetryPolicy {
        RetryPolicy { retries: 3, base_delay: Duration::ZERO }
    }

    pub fn none() -> RetryPolicy {
        RetryPolicy { retries: 0, base_delay: Duration::ZERO }
    }

    fn delay(&self, attempt: u32) -> Duration {
        self.base_delay.saturating_mul(1u32 << attempt.min(16))
    }
}

/// Stable key for a request, used to match replay fixtures.
pub fn request_key(kind: CallKind, request: &Value) -> String {
    let mut h = Sha256::new();
    h.update(kind.as_str().as_bytes());
    h.update([0u8]);
    h.update(serde_json::to_string(request).expect("json value serializes").as_bytes());
    hex::encode(h.finalize())
}

/// `kind:key` reference to the transcripts of a text call.
pub fn text_transcript_ref(request: &ModelRequest) -> String {
    let v = serde_json::to_value(request).expect("request serializes");
    format!("{}:{}", CallKind::Text.as_str(), request_key(CallKind::Text, &v))
}

/// `kind:key` reference to the transcripts of an image call.
pub fn image_transcript_ref(request: &ImageRequest) -> String {
    let v = serde_json::to_value(request).expect("request serializes");
    format!("{}:{}", CallKind::Image.as_str(), request_key(CallKind::Image, &v))
}

/// Retry + transcript wrapper shared by all pipelines.
#[derive(Debug, Clone)]
pub struct Gateway {
    pub log: std::sync::Arc<TranscriptLog>,
    pub retry: RetryPolicy,
}

impl Gateway {
    pub fn new(log: std::sync::Arc<TranscriptLog>, retry: RetryPolicy) -> Gateway {
        Gateway { log, retry }
    }

    /// In-memory log, immediate retries.
    pub fn for_tests() -> Gateway {
        Gateway::new(std::sync::Arc::new(TranscriptLog::in_memory()), RetryPolicy::immediate())
    }

    fn call<T>(
        &self,
        kind: CallKind,
        endpoint: &str,
        request: Value,
        mut f: impl FnMut() -> Result<T, ClientError>,
        render: impl Fn(&T) -> String,
    ) -> Result<T, ClientError> {
        let key = request_key(kind, &request);
        let mut attempt = 0;
        loop {
            let out = f();
            let (raw, err) = match &out {
                Ok(v) => (Some(render(v)), None),
                Err(e) => (None, Some(e.to_string())),
            };
            self.log.append(ModelTranscript {
                kind,
                endpoint_id: endpoint.to_string(),
                request_key: key.clone(),
                request: request.clone(),
                raw_response: raw,
                error: err,
                attempt,
                timestamp: chrono::Utc::now(),
            });
            match out {
                Ok(v) => return Ok(v),
                Err(e) if e.is_transient() && attempt < self.retry.retries => {
                    tracing::debug!(endpoint, attempt, error = %e, "retrying");
                    let d = self.retry.delay(attempt);
                    if !d.is_zero() {
                        thread::sleep(d);
                    }
                    attempt += 1;
                }
                Err(e) => return Err(e),
            }
        }
    }

    pub fn complete(&self, model: &dyn TextModel, request: &ModelRequest) -> Result<String, ClientError> {
        let req = serde_json::to_value(request).expect("request serializes");
        self.call(CallKind::Text, model.endpoint_id(), req, || model.complete(request), |s| s.clone())
    }

    pub fn embed(&self, model: &dyn Embedder, texts: &[String]) -> Result<Vec<Vec<f32>>, ClientError> {
        let req = serde_json::json!({ "input": texts });
        self.call(CallKind::Embed, model.endpoint_id(), req, || model.embed(texts), |v| {
            serde_json::to_string(v).expect("vectors serialize")
        })
    }

    pub fn generate_images(
        &self,
        model: &dyn ImageGenerator,
        request: &ImageRequest,
    ) -> Result<Vec<GeneratedImage>, ClientError> {
        let req = serde_json::to_value(request).expect("request serializes");
        self.call(CallKind::Image, model.endpoint_id(), req, || model.generate(request), |v| {
            serde_json::to_string(v).expect("images serialize")
        })
    }

    pub fn online_search(
        &self,
        source: &dyn OnlineSource,
        query: &str,
        limit: usize,
    ) -> Result<Vec<OnlineImage>, ClientError> {
        let req = serde_json::json!({ "query": query, "limit": limit });
        self.call(CallKind::Online, source.endpoint_id(), req, || source.search(query, limit), |v| {
            serde_json::to_string(v).expect("results serialize")
        })
    }
}

/// Pulls the outermost `{...}` or `[...]` body out of a model reply, dropping
/// code fences and any prose around it.
pub fn extract_json_body(raw: &str) -> Option<&str> {
    let start = raw.find(['{', '['])?;
    let open = raw.as_bytes()[start];
    let close = if open == b'{' { '}' } else { ']' };
    let end = raw.rfind(close)?;
    (end > start).then(|| &raw[start..=end])
}

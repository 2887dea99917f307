//! JSON-over-HTTP endpoint clients.
//!
//! Wire shapes:
//!
//! | endpoint | request | response |
//! |---|---|---|
//! | vision-language | `{model, prompt, image?: {url} \| {mime, data_base64}}` | `{text}` |
//! | embedding | `{model, input: [string]}` | `{embeddings: [[float]]}` |
//! | image generation | `POST {prompt, n, reference_image?}` | `{job_id}`, then `GET <url>/<job_id>` → `{status, images?, error?}` |
//! | online source | `{query, limit}` | `{results: [{image_url, title, source_url}]}` |

use std::path::Path;
use std::time::{Duration, Instant};

use base64::Engine as _;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{
    ClientError, Embedder, GeneratedImage, ImageGenerator, ImageInput, ImageRequest, ModelRequest,
    OnlineImage, OnlineSource, TextModel,
};

fn agent(timeout: Duration) -> ureq::Agent {
    ureq::Agent::config_builder()
        .timeout_global(Some(timeout))
        .http_status_as_error(false)
        .build()
        .into()
}

fn env(name: &str) -> Result<String, ClientError> {
    std::env::var(name)
        .ok()
        .filter(|v| !v.trim().is_empty())
        .ok_or_else(|| ClientError::Config(format!("{name} is not set")))
}

fn map_err(e: ureq::Error) -> ClientError {
    match e {
        ureq::Error::Timeout(_) => ClientError::Timeout(Duration::ZERO),
        other => ClientError::Transport(other.to_string()),
    }
}

#[derive(Debug, Clone)]
struct Endpoint {
    url: String,
    key: Option<String>,
    agent: ureq::Agent,
}

impl Endpoint {
    fn new(url: String, key: Option<String>, timeout: Duration) -> Endpoint {
        Endpoint { url, key, agent: agent(timeout) }
    }

    fn handle(mut resp: ureq::http::Response<ureq::Body>) -> Result<Value, ClientError> {
        let code = resp.status().as_u16();
        if !(200..300).contains(&code) {
            let body = resp.body_mut().read_to_string().unwrap_or_default();
            return Err(ClientError::Status { code, body });
        }
        resp.body_mut()
            .read_json::<Value>()
            .map_err(|e| ClientError::Malformed(e.to_string()))
    }

    fn post(&self, url: &str, body: &Value) -> Result<Value, ClientError> {
        let mut req = self.agent.post(url);
        if let Some(k) = &self.key {
            req = req.header("Authorization", &format!("Bearer {k}"));
        }
        Endpoint::handle(req.send_json(body).map_err(map_err)?)
    }

    fn get(&self, url: &str) -> Result<Value, ClientError> {
        let mut req = self.agent.get(url);
        if let Some(k) = &self.key {
            req = req.header("Authorization", &format!("Bearer {k}"));
        }
        Endpoint::handle(req.call().map_err(map_err)?)
    }
}

fn field<T: for<'de> Deserialize<'de>>(v: &Value, name: &str) -> Result<T, ClientError> {
    let f = v
        .get(name)
        .ok_or_else(|| ClientError::Malformed(format!("response has no `{name}`")))?;
    serde_json::from_value(f.clone()).map_err(|e| ClientError::Malformed(format!("`{name}`: {e}")))
}

/// Encodes an image for the wire; existing local files are inlined.
pub fn image_payload(image: &ImageInput) -> Result<Value, ClientError> {
    match image {
        ImageInput::Inline { mime, data_base64 } => Ok(json!({ "mime": mime, "data_base64": data_base64 })),
        ImageInput::Ref(r) if r.starts_with("http://") || r.starts_with("https://") => Ok(json!({ "url": r })),
        ImageInput::Ref(r) => {
            let path = Path::new(r);
            let bytes = std::fs::read(path)
                .map_err(|e| ClientError::Config(format!("image `{r}`: {e}")))?;
            Ok(json!({
                "mime": mime_for(path),
                "data_base64": base64::engine::general_purpose::STANDARD.encode(bytes),
            }))
        }
    }
}

/// Downloads an image a generator returned by URL. Returns (mime, bytes).
pub fn fetch_bytes(url: &str, max_bytes: u64) -> Result<(String, Vec<u8>), ClientError> {
    let mut resp = agent(Duration::from_secs(60)).get(url).call().map_err(map_err)?;
    let code = resp.status().as_u16();
    if !(200..300).contains(&code) {
        return Err(ClientError::Status { code, body: String::new() });
    }
    let mime = resp
        .headers()
        .get("content-type")
        .and_then(|v| v.to_str().ok())
        .unwrap_or("application/octet-stream")
        .to_string();
    let bytes = resp
        .body_mut()
        .with_config()
        .limit(max_bytes)
        .read_to_vec()
        .map_err(map_err)?;
    Ok((mime, bytes))
}

pub fn mime_for(path: &Path) -> &'static str {
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("png") => "image/png",
        Some("jpg" | "jpeg") => "image/jpeg",
        Some("webp") => "image/webp",
        Some("gif") => "image/gif",
        Some("svg") => "image/svg+xml",
        _ => "application/octet-stream",
    }
}

/// Vision-language chat endpoint (`VLM_API_URL`, `VLM_API_KEY`).
#[derive(Debug, Clone)]
pub struct HttpTextModel {
    endpoint: Endpoint,
    model: String,
    id: String,
}

impl HttpTextModel {
    pub fn new(url: impl Into<String>, key: Option<String>, model: impl Into<String>) -> HttpTextModel {
        let url = url.into();
        let model = model.into();
        HttpTextModel {
            id: format!("{model}@{url}"),
            endpoint: Endpoint::new(url, key, Duration::from_secs(120)),
            model,
        }
    }

    pub fn from_env() -> Result<HttpTextModel, ClientError> {
        Ok(HttpTextModel::new(
            env("VLM_API_URL")?,
            std::env::var("VLM_API_KEY").ok(),
            std::env::var("VLM_MODEL").unwrap_or_else(|_| "default".into()),
        ))
    }
}

impl TextModel for HttpTextModel {
    fn endpoint_id(&self) -> &str {
        &self.id
    }

    fn complete(&self, request: &ModelRequest) -> Result<String, ClientError> {
        let mut body = json!({ "model": self.model, "prompt": request.prompt });
        if let Some(img) = &request.image {
            body["image"] = image_payload(img)?;
        }
        field(&self.endpoint.post(&self.endpoint.url, &body)?, "text")
    }
}

/// Embedding endpoint (`EMBED_API_URL`, `EMBED_API_KEY`).
#[derive(Debug, Clone)]
pub struct HttpEmbedder {
    endpoint: Endpoint,
    model: String,
    id: String,
}

impl HttpEmbedder {
    pub fn new(url: impl Into<String>, key: Option<String>, model: impl Into<String>) -> HttpEmbedder {
        let url = url.into();
        let model = model.into();
        HttpEmbedder {
            id: format!("{model}@{url}"),
            endpoint: Endpoint::new(url, key, Duration::from_secs(60)),
            model,
        }
    }

    pub fn from_env() -> Result<HttpEmbedder, ClientError> {
        Ok(HttpEmbedder::new(
            env("EMBED_API_URL")?,
            std::env::var("EMBED_API_KEY").ok(),
            std::env::var("EMBED_MODEL").unwrap_or_else(|_| "default".into()),
        ))
    }
}

impl Embedder for HttpEmbedder {
    fn endpoint_id(&self) -> &str {
        &self.id
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f32>>, ClientError> {
        let body = json!({ "model": self.model, "input": texts });
        let out: Vec<Vec<f32>> = field(&self.endpoint.post(&self.endpoint.url, &body)?, "embeddings")?;
        if out.len() != texts.len() {
            return Err(ClientError::Malformed(format!(
                "{} embeddings for {} inputs",
                out.len(),
                texts.len()
            )));
        }
        Ok(out)
    }
}

#[derive(Debug, Deserialize, Serialize)]
struct ImageJobStatus {
    status: String,
    #[serde(default)]
    images: Vec<GeneratedImage>,
    #[serde(default)]
    error: Option<String>,
}

/// Asynchronous image-generation endpoint (`IMG_API_URL`, `IMG_API_KEY`):
/// submit, then poll the job until it finishes or `timeout` elapses.
#[derive(Debug, Clone)]
pub struct HttpImageGenerator {
    endpoint: Endpoint,
    id: String,
    pub poll_interval: Duration,
    pub timeout: Duration,
}

impl HttpImageGenerator {
    pub fn new(url: impl Into<String>, key: Option<String>) -> HttpImageGenerator {
        let url = url.into();
        HttpImageGenerator {
            id: format!("image@{url}"),
            endpoint: Endpoint::new(url, key, Duration::from_secs(30)),
            poll_interval: Duration::from_secs(2),
            timeout: Duration::from_secs(300),
        }
    }

    pub fn from_env() -> Result<HttpImageGenerator, ClientError> {
        Ok(HttpImageGenerator::new(env("IMG_API_URL")?, std::env::var("IMG_API_KEY").ok()))
    }
}

impl ImageGenerator for HttpImageGenerator {
    fn endpoint_id(&self) -> &str {
        &self.id
    }

    fn generate(&self, request: &ImageRequest) -> Result<Vec<GeneratedImage>, ClientError> {
        let mut body = json!({ "prompt": request.prompt, "n": request.n });
        if let Some(img) = &request.reference {
            body["reference_image"] = image_payload(img)?;
        }
        let job_id: String = field(&self.endpoint.post(&self.endpoint.url, &body)?, "job_id")?;
        let poll_url = format!("{}/{}", self.endpoint.url.trim_end_matches('/'), job_id);
        let started = Instant::now();
        loop {
            let status: ImageJobStatus = serde_json::from_value(self.endpoint.get(&poll_url)?)
                .map_err(|e| ClientError::Malformed(e.to_string()))?;
            match status.status.as_str() {
                "done" | "completed" | "succeeded" => return Ok(status.images),
                "failed" | "error" => {
                    return Err(ClientError::Status {
                        code: 500,
                        body: status.error.unwrap_or_else(|| "image job failed".into()),
                    })
                }
                _ => {}
            }
            if started.elapsed() >= self.timeout {
                return Err(ClientError::Timeout(self.timeout));
            }
            std::thread::sleep(self.poll_interval);
        }
    }
}

/// Third-party image search (`ONLINE_SEARCH_URL`).
#[derive(Debug, Clone)]
pub struct HttpOnlineSource {
    endpoint: Endpoint,
    id: String,
}

impl HttpOnlineSource {
    pub fn new(url: impl Into<String>) -> HttpOnlineSource {
        let url = url.into();
        HttpOnlineSource { id: format!("online@{url}"), endpoint: Endpoint::new(url, None, Duration::from_secs(30)) }
    }

    pub fn from_env() -> Result<HttpOnlineSource, ClientError> {
        Ok(HttpOnlineSource::new(env("ONLINE_SEARCH_URL")?))
    }
}

impl OnlineSource for HttpOnlineSource {
    fn endpoint_id(&self) -> &str {
        &self.id
    }

    fn search(&self, query: &str, limit: usize) -> Result<Vec<OnlineImage>, ClientError> {
        let body = json!({ "query": query, "limit": limit });
        field(&self.endpoint.post(&self.endpoint.url, &body)?, "results")
    }
}

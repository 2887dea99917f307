//! In-process endpoint doubles for tests, demos and offline runs.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use base64::Engine as _;
use sha2::{Digest, Sha256};

use super::{
    ClientError, Embedder, GeneratedImage, ImageGenerator, ImageRequest, ModelRequest,
    OnlineImage, OnlineSource, TextModel,
};

/// Returns the prompt it was given.
#[derive(Debug, Default)]
pub struct EchoModel {
    calls: AtomicUsize,
    last: Mutex<Option<ModelRequest>>,
}

impl EchoModel {
    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn last_request(&self) -> Option<ModelRequest> {
        self.last.lock().unwrap().clone()
    }
}

impl TextModel for EchoModel {
    fn endpoint_id(&self) -> &str {
        "mock:echo"
    }

    fn complete(&self, request: &ModelRequest) -> Result<String, ClientError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        *self.last.lock().unwrap() = Some(request.clone());
        Ok(request.prompt.clone())
    }
}

type Script = Box<dyn Fn(&ModelRequest) -> Result<String, ClientError> + Send + Sync>;

/// Answers through a closure.
pub struct ScriptedModel {
    script: Script,
    calls: AtomicUsize,
    requests: Mutex<Vec<ModelRequest>>,
}

impl ScriptedModel {
    pub fn new(
        script: impl Fn(&ModelRequest) -> Result<String, ClientError> + Send + Sync + 'static,
    ) -> ScriptedModel {
        ScriptedModel { script: Box::new(script), calls: AtomicUsize::new(0), requests: Mutex::new(Vec::new()) }
    }

    /// Replies with the given strings in order, then errors.
    pub fn sequence(replies: Vec<String>) -> ScriptedModel {
        let replies = Mutex::new(replies.into_iter());
        ScriptedModel::new(move |_| {
            replies
                .lock()
                .unwrap()
                .next()
                .ok_or_else(|| ClientError::Malformed("script exhausted".into()))
        })
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn requests(&self) -> Vec<ModelRequest> {
        self.requests.lock().unwrap().clone()
    }
}

impl std::fmt::Debug for ScriptedModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScriptedModel").field("calls", &self.calls()).finish_non_exhaustive()
    }
}

impl TextModel for ScriptedModel {
    fn endpoint_id(&self) -> &str {
        "mock:scripted"
    }

    fn complete(&self, request: &ModelRequest) -> Result<String, ClientError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.requests.lock().unwrap().push(request.clone());
        (self.script)(request)
    }
}

/// Every call fails with a transient transport error.
#[derive(Debug)]
pub struct FailingModel {
    message: String,
    calls: AtomicUsize,
}

impl FailingModel {
    pub fn new(message: impl Into<String>) -> FailingModel {
        FailingModel { message: message.into(), calls: AtomicUsize::new(0) }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    fn fail<T>(&self) -> Result<T, ClientError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        Err(ClientError::Transport(self.message.clone()))
    }
}

impl TextModel for FailingModel {
    fn endpoint_id(&self) -> &str {
        "mock:failing"
    }
    fn complete(&self, _: &ModelRequest) -> Result<String, ClientError> {
        self.fail()
    }
}

impl Embedder for FailingModel {
    fn endpoint_id(&self) -> &str {
        "mock:failing"
    }
    fn embed(&self, _: &[String]) -> Result<Vec<Vec<f32>>, ClientError> {
        self.fail()
    }
}

impl ImageGenerator for FailingModel {
    fn endpoint_id(&self) -> &str {
        "mock:failing"
    }
    fn generate(&self, _: &ImageRequest) -> Result<Vec<GeneratedImage>, ClientError> {
        self.fail()
    }
}

impl OnlineSource for FailingModel {
    fn endpoint_id(&self) -> &str {
        "mock:failing"
    }
    fn search(&self, _: &str, _: usize) -> Result<Vec<OnlineImage>, ClientError> {
        self.fail()
    }
}

/// Produces `n` small SVG placeholder images, optionally after a delay.
#[derive(Debug, Default)]
pub struct PlaceholderImages {
    pub delay: Duration,
    calls: AtomicUsize,
    requests: Mutex<Vec<ImageRequest>>,
}

impl PlaceholderImages {
    pub fn with_delay(delay: Duration) -> PlaceholderImages {
        PlaceholderImages { delay, ..Default::default() }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn requests(&self) -> Vec<ImageRequest> {
        self.requests.lock().unwrap().clone()
    }
}

impl ImageGenerator for PlaceholderImages {
    fn endpoint_id(&self) -> &str {
        "mock:placeholder"
    }

    fn generate(&self, request: &ImageRequest) -> Result<Vec<GeneratedImage>, ClientError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.requests.lock().unwrap().push(request.clone());
        if !self.delay.is_zero() {
            std::thread::sleep(self.delay);
        }
        let digest = hex::encode(Sha256::digest(request.prompt.as_bytes()));
        Ok((0..request.n)
            .map(|i| {
                let svg = format!(
                    "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"64\" height=\"64\">\
                     <rect width=\"64\" height=\"64\" fill=\"#{}\"/><text x=\"4\" y=\"36\">{i}</text></svg>",
                    &digest[i % 8 * 6..i % 8 * 6 + 6]
                );
                GeneratedImage::Bytes {
                    mime: "image/svg+xml".into(),
                    data_base64: base64::engine::general_purpose::STANDARD.encode(svg),
                }
            })
            .collect())
    }
}

/// Deterministic pseudo-embeddings derived from a hash of the text.
#[derive(Debug)]
pub struct HashEmbedder {
    pub dim: usize,
    calls: AtomicUsize,
}

impl HashEmbedder {
    pub fn new(dim: usize) -> HashEmbedder {
        HashEmbedder { dim, calls: AtomicUsize::new(0) }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn vector(&self, text: &str) -> Vec<f32> {
        let mut out = Vec::with_capacity(self.dim);
        let mut block = 0u32;
        while out.len() < self.dim {
            let mut h = Sha256::new();
            h.update(text.as_bytes());
            h.update(block.to_le_bytes());
            for chunk in h.finalize().chunks(2) {
                if out.len() == self.dim {
                    break;
                }
                let v = u16::from_le_bytes([chunk[0], chunk[1]]) as f32 / 65535.0 - 0.5;
                out.push(v);
            }
            block += 1;
        }
        out
    }
}

impl Embedder for HashEmbedder {
    fn endpoint_id(&self) -> &str {
        "mock:hash-embedder"
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f32>>, ClientError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        Ok(texts.iter().map(|t| self.vector(t)).collect())
    }
}

/// Fixed online results regardless of the query.
#[derive(Debug, Default)]
pub struct StaticOnline {
    pub results: Vec<OnlineImage>,
}

impl OnlineSource for StaticOnline {
    fn endpoint_id(&self) -> &str {
        "mock:online"
    }

    fn search(&self, _: &str, limit: usize) -> Result<Vec<OnlineImage>, ClientError> {
        Ok(self.results.iter().take(limit).cloned().collect())
    }
}

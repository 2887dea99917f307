//! Service state: the data directory, the stores opened from it and the
//! external clients.

use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use anyhow::Context;
use guohua_core::annotator::KnowledgeBase;
use guohua_core::client::http::{HttpEmbedder, HttpImageGenerator, HttpOnlineSource, HttpTextModel};
use guohua_core::client::{
    ClientError, Embedder, Gateway, GeneratedImage, ImageGenerator, ImageInput, ImageRequest, ModelRequest,
    OnlineImage, OnlineSource, RetryPolicy, TextModel, TranscriptLog,
};
use guohua_core::corpus::{AnnotationSet, CorpusStore};
use guohua_core::design_space::DesignSpaceCatalog;
use guohua_core::ideation::{run_generation, ChainContext, GenerationRequest, GenerationResult, ImageStore};
use guohua_core::search::{build_index, IndexHandle};

use crate::boards::{BoardError, BoardStore, ItemSource};
use crate::jobs::JobExecutor;

/// The external endpoints the service talks to.
#[derive(Clone)]
pub struct Clients {
    pub text: Arc<dyn TextModel>,
    pub embedder: Arc<dyn Embedder>,
    pub images: Arc<dyn ImageGenerator>,
    pub online: Option<Arc<dyn OnlineSource>>,
}

/// Stands in for an endpoint whose environment variables are missing; every
/// call fails with the configuration error.
struct Unconfigured(String);

impl TextModel for Unconfigured {
    fn endpoint_id(&self) -> &str {
        "unconfigured"
    }
    fn complete(&self, _: &ModelRequest) -> Result<String, ClientError> {
        Err(ClientError::Config(self.0.clone()))
    }
}

impl Embedder for Unconfigured {
    fn endpoint_id(&self) -> &str {
        "unconfigured"
    }
    fn embed(&self, _: &[String]) -> Result<Vec<Vec<f32>>, ClientError> {
        Err(ClientError::Config(self.0.clone()))
    }
}

impl ImageGenerator for Unconfigured {
    fn endpoint_id(&self) -> &str {
        "unconfigured"
    }
    fn generate(&self, _: &ImageRequest) -> Result<Vec<GeneratedImage>, ClientError> {
        Err(ClientError::Config(self.0.clone()))
    }
}

impl OnlineSource for Unconfigured {
    fn endpoint_id(&self) -> &str {
        "unconfigured"
    }
    fn search(&self, _: &str, _: usize) -> Result<Vec<OnlineImage>, ClientError> {
        Err(ClientError::Config(self.0.clone()))
    }
}

fn or_unconfigured<T, D: ?Sized>(r: Result<T, ClientError>, wrap: impl FnOnce(T) -> Arc<D>, fallback: impl FnOnce(String) -> Arc<D>) -> Arc<D> {
    match r {
        Ok(c) => wrap(c),
        Err(e) => {
            tracing::warn!(error = %e, "endpoint not configured");
            fallback(e.to_string())
        }
    }
}

impl Clients {
    /// HTTP clients from the environment. Missing endpoints fail per call
    /// instead of at startup, so a service without an image endpoint can
    /// still search and host boards.
    pub fn from_env() -> Clients {
        Clients {
            text: or_unconfigured(HttpTextModel::from_env(), |c| Arc::new(c) as Arc<dyn TextModel>, |m| Arc::new(Unconfigured(m))),
            embedder: or_unconfigured(HttpEmbedder::from_env(), |c| Arc::new(c) as Arc<dyn Embedder>, |m| Arc::new(Unconfigured(m))),
            images: or_unconfigured(
                HttpImageGenerator::from_env(),
                |c| Arc::new(c) as Arc<dyn ImageGenerator>,
                |m| Arc::new(Unconfigured(m)),
            ),
            online: HttpOnlineSource::from_env().ok().map(|c| Arc::new(c) as Arc<dyn OnlineSource>),
        }
    }
}

/// File layout under the data directory.
#[derive(Debug, Clone)]
pub struct DataDir {
    pub root: PathBuf,
}

impl DataDir {
    pub fn new(root: impl Into<PathBuf>) -> DataDir {
        DataDir { root: root.into() }
    }
    pub fn corpus(&self) -> PathBuf {
        self.root.join("corpus.jsonl")
    }
    pub fn catalog(&self) -> PathBuf {
        self.root.join("catalog.json")
    }
    pub fn clusters(&self) -> PathBuf {
        self.root.join("clusters.json")
    }
    pub fn knowledge(&self) -> PathBuf {
        self.root.join("knowledge.jsonl")
    }
    pub fn boards(&self) -> PathBuf {
        self.root.join("boards")
    }
    pub fn jobs(&self) -> PathBuf {
        self.root.join("jobs.jsonl")
    }
    pub fn images(&self) -> PathBuf {
        self.root.join("images")
    }
    pub fn transcripts(&self) -> PathBuf {
        self.root.join("transcripts.jsonl")
    }
    pub fn classifier(&self) -> PathBuf {
        self.root.join("classifier.json")
    }

    /// Relative image refs in the corpus are relative to the data directory.
    pub fn resolve_image(&self, image_ref: &str) -> String {
        if image_ref.contains("://") || Path::new(image_ref).is_absolute() {
            image_ref.to_string()
        } else {
            self.root.join(image_ref).display().to_string()
        }
    }
}

pub struct Studio {
    pub data: DataDir,
    pub corpus: CorpusStore,
    pub index: IndexHandle,
    pub catalog: RwLock<Option<DesignSpaceCatalog>>,
    pub boards: BoardStore,
    pub images: ImageStore,
    pub kb: KnowledgeBase,
    pub gateway: Gateway,
    pub clients: Clients,
}

impl std::fmt::Debug for Studio {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Studio").field("data", &self.data).finish_non_exhaustive()
    }
}

impl Studio {
    /// Opens everything under `root`, creating directories as needed. Model
    /// calls are logged to `transcripts.jsonl`.
    pub fn open(root: impl Into<PathBuf>, clients: Clients, retry: RetryPolicy) -> anyhow::Result<Studio> {
        let data = DataDir::new(root);
        std::fs::create_dir_all(&data.root).with_context(|| format!("creating {}", data.root.display()))?;
        let corpus = CorpusStore::open(data.corpus()).context("opening corpus")?;
        let index = IndexHandle::new(build_index(&corpus.snapshot()));
        let catalog = if data.catalog().exists() {
            Some(DesignSpaceCatalog::load(&data.catalog()).context("loading catalog")?)
        } else {
            None
        };
        let kb = if data.knowledge().exists() {
            KnowledgeBase::load(&data.knowledge()).context("loading knowledge base")?
        } else {
            KnowledgeBase::empty()
        };
        let boards = BoardStore::open(data.boards()).context("opening boards")?;
        let images = ImageStore::open(data.images()).context("opening image store")?;
        let log = TranscriptLog::append_to(&data.transcripts()).context("opening transcript log")?;
        Ok(Studio {
            corpus,
            index,
            catalog: RwLock::new(catalog),
            boards,
            images,
            kb,
            gateway: Gateway::new(Arc::new(log), retry),
            clients,
            data,
        })
    }

    pub fn chain(&self) -> ChainContext<'_> {
        ChainContext {
            gateway: &self.gateway,
            text: self.clients.text.as_ref(),
            images: self.clients.images.as_ref(),
            store: &self.images,
            kb: &self.kb,
        }
    }

    /// An image prompt is a stored image ref or a corpus record id.
    pub fn resolve_image_prompt(&self, prompt: &str) -> Result<ImageInput, String> {
        if ImageStore::is_valid_ref(prompt) && self.images.contains(prompt) {
            return self.images.input(prompt).map_err(|e| e.to_string());
        }
        match self.corpus.snapshot().get(prompt) {
            Some(r) => Ok(ImageInput::Ref(self.data.resolve_image(&r.image_ref))),
            None => Err(format!("image prompt `{prompt}` is neither a stored image nor a painting")),
        }
    }

    /// System tags for a new board item.
    pub fn system_tags(&self, source: &ItemSource) -> Result<AnnotationSet, BoardError> {
        match source {
            ItemSource::CorpusPainting { record_id } => self
                .corpus
                .snapshot()
                .get(record_id)
                .map(|r| r.annotations.clone())
                .ok_or_else(|| BoardError::UnknownRecord(record_id.clone())),
            ItemSource::GeneratedImage { image_ref } => {
                if self.images.contains(image_ref) {
                    Ok(AnnotationSet::new())
                } else {
                    Err(BoardError::UnknownRecord(image_ref.clone()))
                }
            }
            ItemSource::OnlineImage { .. } => Ok(AnnotationSet::new()),
        }
    }

    /// Runs one request through the chain.
    pub fn generate(&self, request: &GenerationRequest) -> Result<GenerationResult, String> {
        let reference = request.image_prompt.as_deref().map(|p| self.resolve_image_prompt(p)).transpose()?;
        run_generation(self.chain(), request, reference).map_err(|e| e.to_string())
    }

    pub fn reload_catalog(&self) -> anyhow::Result<()> {
        let c = DesignSpaceCatalog::load(&self.data.catalog()).context("loading catalog")?;
        *self.catalog.write().expect("catalog lock") = Some(c);
        Ok(())
    }
}

/// Job executor backed by a [`Studio`].
pub struct ChainExecutor(pub Arc<Studio>);

impl JobExecutor for ChainExecutor {
    fn execute(&self, request: &GenerationRequest) -> Result<GenerationResult, String> {
        self.0.generate(request)
    }
}

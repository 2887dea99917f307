//! Symbol association, the tag → intention → image → poem chain, the baseline
//! prompt, and the evaluation batch runner.

mod chain;
mod eval;
mod images;
mod sampler;
mod suggest;

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

pub use chain::{
    attach_poem, baseline_prompt, craft_design_intention, generate_images, run_generation,
    ChainContext, Intention, BASELINE_KEYWORD,
};
pub use eval::{
    export_bundle, import_bundle, rating_items, run_eval_batch, EvalBundle, EvalConfig, EvalOutput,
    EvalSet, CRITERIA,
};
pub use images::ImageStore;
pub use sampler::{sample_eval_tagset, MANDATORY, OPTIONAL, OPTIONAL_PROBABILITY};
pub use suggest::{build_suggest_prompt, parse_suggestions, suggest_symbols};

use crate::client::ClientError;
use crate::corpus::{Tag, TagDimension};

pub const DEFAULT_IMAGE_COUNT: usize = 3;

#[derive(Debug, thiserror::Error)]
pub enum IdeationError {
    #[error("theme is empty")]
    EmptyTheme,
    #[error("count must be at least 1")]
    ZeroCount,
    #[error("request has neither tags nor free text")]
    EmptyRequest,
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("duplicate tag {0}")]
    DuplicateTag(String),
    #[error("model returned an empty design intention")]
    EmptyIntention,
    #[error("unparseable response: {reason}")]
    Parse { reason: String, raw: String },
    #[error("asked for {wanted} images, got {got}")]
    ImageCount { wanted: usize, got: usize },
    #[error("sampler: {0}")]
    Sampler(String),
    #[error("evaluation: {0}")]
    Eval(String),
    #[error("image store: {0}")]
    Images(String),
    #[error(transparent)]
    Client(#[from] ClientError),
}

/// Whether a poem was recalled, composed, or could not be produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoemOrigin {
    Existing,
    Generated,
    Unavailable,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Poem {
    pub text: String,
    pub origin: PoemOrigin,
    /// Author or title for existing poems.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attribution: Option<String>,
}

impl Poem {
    pub fn unavailable() -> Poem {
        Poem { text: String::new(), origin: PoemOrigin::Unavailable, attribution: None }
    }

    pub fn is_available(&self) -> bool {
        self.origin != PoemOrigin::Unavailable
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymbolSuggestion {
    pub symbol: String,
    pub explanation: String,
    pub poem: Poem,
}

/// Tags selected for one generation, with no repeated (dimension, concept).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Tag>", into = "Vec<Tag>")]
pub struct TagSet {
    tags: Vec<Tag>,
}

impl TryFrom<Vec<Tag>> for TagSet {
    type Error = IdeationError;
    fn try_from(tags: Vec<Tag>) -> Result<Self, Self::Error> {
        TagSet::new(tags)
    }
}

impl From<TagSet> for Vec<Tag> {
    fn from(t: TagSet) -> Self {
        t.tags
    }
}

impl TagSet {
    pub fn new(tags: Vec<Tag>) -> Result<TagSet, IdeationError> {
        let mut seen = HashSet::new();
        for t in &tags {
            if !seen.insert((t.dimension, t.concept())) {
                return Err(IdeationError::DuplicateTag(format!("{}:{}", t.dimension.key(), t.concept())));
            }
        }
        Ok(TagSet { tags })
    }

    /// Builds from (dimension, concept) pairs.
    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (TagDimension, &'a str)>) -> Result<TagSet, IdeationError> {
        let tags = pairs
            .into_iter()
            .map(|(d, c)| Tag::new(d, c).map_err(|e| IdeationError::InvalidRequest(e.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        TagSet::new(tags)
    }

    pub fn tags(&self) -> &[Tag] {
        &self.tags
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    pub fn concepts(&self) -> Vec<&str> {
        self.tags.iter().map(|t| t.concept()).collect()
    }

    pub fn count(&self, dim: TagDimension) -> usize {
        self.tags.iter().filter(|t| t.dimension == dim).count()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenerationMode {
    #[default]
    Crafted,
    Baseline,
}

impl GenerationMode {
    pub fn as_str(self) -> &'static str {
        match self {
            GenerationMode::Crafted => "crafted",
            GenerationMode::Baseline => "baseline",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationRequest {
    #[serde(default)]
    pub tags: TagSet,
    #[serde(default)]
    pub free_text: Option<String>,
    /// Record id or uploaded image ref used as a style reference.
    #[serde(default)]
    pub image_prompt: Option<String>,
    #[serde(default)]
    pub mode: GenerationMode,
    #[serde(default = "default_image_count")]
    pub image_count: usize,
}

fn default_image_count() -> usize {
    DEFAULT_IMAGE_COUNT
}

impl GenerationRequest {
    pub fn crafted(tags: TagSet) -> GenerationRequest {
        GenerationRequest {
            tags,
            free_text: None,
            image_prompt: None,
            mode: GenerationMode::Crafted,
            image_count: DEFAULT_IMAGE_COUNT,
        }
    }

    pub fn baseline(tags: TagSet) -> GenerationRequest {
        GenerationRequest { mode: GenerationMode::Baseline, ..GenerationRequest::crafted(tags) }
    }

    pub fn free_text(&self) -> Option<&str> {
        self.free_text.as_deref().map(str::trim).filter(|s| !s.is_empty())
    }

    pub fn validate(&self) -> Result<(), IdeationError> {
        if self.image_count == 0 {
            return Err(IdeationError::InvalidRequest("image_count must be at least 1".into()));
        }
        if self.tags.is_empty() && self.free_text().is_none() {
            return Err(IdeationError::EmptyRequest);
        }
        if self.mode == GenerationMode::Baseline && self.tags.is_empty() {
            return Err(IdeationError::InvalidRequest("baseline mode needs tags".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationResult {
    pub mode: GenerationMode,
    /// Crafted intention, or the raw baseline prompt.
    pub design_intention: String,
    pub images: Vec<String>,
    /// Attached to the first image.
    pub poem: Poem,
    /// `kind:request_key` references into the transcript log.
    pub transcripts: Vec<String>,
}

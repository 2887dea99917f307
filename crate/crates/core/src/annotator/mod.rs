//! Two-stage painting annotation through a vision-language model.
//!
//! Stage one asks for symbols, emotion, composition, brushstroke and color
//! tone with injected reference knowledge. Stage two feeds those tags back
//! and asks for style keywords only.

mod knowledge;
mod prompt;

use std::collections::VecDeque;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

pub use knowledge::{Applicability, KnowledgeBase, KnowledgeEntry};
pub use prompt::{build_dimension_prompt, build_style_prompt, AnnotationPrompt, EMPTY_KNOWLEDGE, STAGE_ONE};

use crate::client::{extract_json_body, ClientError, Gateway, ImageInput, ModelRequest, TextModel};
use crate::corpus::{
    validate_annotation, AnnotationSet, CorpusError, CorpusStore, PaintingRecord, TagDimension,
};

#[derive(Debug, thiserror::Error)]
pub enum AnnotatorError {
    #[error("record `{0}` has no image reference")]
    MissingImage(String),
    #[error("first-stage annotation is empty")]
    EmptyFirstStage,
    #[error("unparseable response: {reason}")]
    Parse { reason: String, raw: String },
    #[error("knowledge base: {0}")]
    Knowledge(String),
    #[error("unknown record `{0}`")]
    UnknownRecord(String),
    #[error(transparent)]
    Client(#[from] ClientError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

impl AnnotatorError {
    /// Raw model text for parse failures.
    pub fn raw_response(&self) -> Option<&str> {
        match self {
            AnnotatorError::Parse { raw, .. } => Some(raw),
            _ => None,
        }
    }
}

/// Parses a model reply into an annotation set, discarding code fences and
/// prose outside the outermost JSON body.
pub fn parse_annotation_response(raw: &str) -> Result<(AnnotationSet, Vec<String>), AnnotatorError> {
    let fail = |reason: String| AnnotatorError::Parse { reason, raw: raw.to_string() };
    let body = extract_json_body(raw).ok_or_else(|| fail("no JSON body found".into()))?;
    let value: serde_json::Value = serde_json::from_str(body).map_err(|e| fail(e.to_string()))?;
    validate_annotation(&value).map_err(|e| fail(e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotated {
    pub annotations: AnnotationSet,
    pub warnings: Vec<String>,
}

/// Runs both stages for one record. The record itself is not touched.
///
/// A stage-one failure is an error. A stage-two failure keeps the stage-one
/// tags with an empty style list and a warning.
pub fn annotate_painting(
    gateway: &Gateway,
    model: &dyn TextModel,
    record: &PaintingRecord,
    kb: &KnowledgeBase,
) -> Result<Annotated, AnnotatorError> {
    let prompt = build_dimension_prompt(record, kb)?;
    let request = ModelRequest::with_image(prompt.render(), ImageInput::Ref(prompt.attached_image_ref.clone()));
    let raw = gateway.complete(model, &request)?;
    let (parsed, mut warnings) = parse_annotation_response(&raw)?;

    let mut set = AnnotationSet::new();
    for d in STAGE_ONE {
        set.set_dimension(d, parsed.get(d).to_vec());
    }
    if !parsed.get(TagDimension::Style).is_empty() {
        warnings.push("stage one returned style tags; ignored".into());
    }

    match build_style_prompt(&set) {
        Err(_) => warnings.push("stage one produced no tags; style pass skipped".into()),
        Ok(style_prompt) => match gateway
            .complete(model, &ModelRequest::text(style_prompt))
            .map_err(AnnotatorError::from)
            .and_then(|r| parse_annotation_response(&r))
        {
            Ok((style, w)) => {
                warnings.extend(w);
                set.set_dimension(TagDimension::Style, style.get(TagDimension::Style).to_vec());
            }
            Err(e) => {
                tracing::warn!(record = %record.id, error = %e, "style pass failed");
                warnings.push(format!("style pass failed: {e}"));
            }
        },
    }
    Ok(Annotated { annotations: set, warnings })
}

/// Annotates a stored record and commits the result. Nothing is written on
/// failure.
pub fn annotate_stored(
    store: &CorpusStore,
    gateway: &Gateway,
    model: &dyn TextModel,
    kb: &KnowledgeBase,
    id: &str,
) -> Result<Annotated, AnnotatorError> {
    let record = store
        .snapshot()
        .get(id)
        .cloned()
        .ok_or_else(|| AnnotatorError::UnknownRecord(id.to_string()))?;
    let out = annotate_painting(gateway, model, &record, kb)?;
    let annotations = out.annotations.clone();
    store.update(|records| {
        let slot = records
            .iter_mut()
            .find(|r| r.id == id)
            .ok_or_else(|| CorpusError::UnknownRecord(id.to_string()))?;
        slot.annotations = annotations;
        Ok(())
    })?;
    Ok(out)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BatchReport {
    pub annotated: Vec<String>,
    pub failed: Vec<(String, String)>,
    pub warnings: Vec<(String, String)>,
}

/// Annotates `ids` with at most `workers` records in flight. Results are
/// reported in id order.
pub fn annotate_batch(
    store: &CorpusStore,
    gateway: &Gateway,
    model: &dyn TextModel,
    kb: &KnowledgeBase,
    ids: &[String],
    workers: usize,
) -> BatchReport {
    let queue: Mutex<VecDeque<&String>> = Mutex::new(ids.iter().collect());
    let report = Mutex::new(BatchReport::default());
    std::thread::scope(|s| {
        for _ in 0..workers.max(1).min(ids.len().max(1)) {
            s.spawn(|| loop {
                let Some(id) = queue.lock().expect("queue lock").pop_front() else { break };
                let res = annotate_stored(store, gateway, model, kb, id);
                let mut rep = report.lock().expect("report lock");
                match res {
                    Ok(a) => {
                        rep.annotated.push(id.clone());
                        rep.warnings.extend(a.warnings.into_iter().map(|w| (id.clone(), w)));
                    }
                    Err(e) => rep.failed.push((id.clone(), e.to_string())),
                }
            });
        }
    });
    let mut rep = report.into_inner().expect("report lock");
    rep.annotated.sort();
    rep.failed.sort();
    rep.warnings.sort();
    rep
}

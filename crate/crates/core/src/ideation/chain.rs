use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::images::ImageStore;
use super::{GenerationMode, GenerationRequest, GenerationResult, IdeationError, Poem, PoemOrigin, TagSet};
use crate::annotator::KnowledgeBase;
use crate::client::{
    extract_json_body, image_transcript_ref, text_transcript_ref, Gateway, ImageGenerator,
    ImageInput, ImageRequest, ModelRequest, TextModel,
};
use crate::corpus::TagDimension;

/// Appended to baseline prompts.
pub const BASELINE_KEYWORD: &str = "Chinese painting";

/// Everything one generation needs.
#[derive(Clone, Copy)]
pub struct ChainContext<'a> {
    pub gateway: &'a Gateway,
    pub text: &'a dyn TextModel,
    pub images: &'a dyn ImageGenerator,
    pub store: &'a ImageStore,
    pub kb: &'a KnowledgeBase,
}

/// `"a, b, Chinese painting"`. Never consults the knowledge base.
pub fn baseline_prompt(tags: &TagSet) -> Result<String, IdeationError> {
    if tags.is_empty() {
        return Err(IdeationError::InvalidRequest("baseline prompt needs at least one tag".into()));
    }
    let mut parts = tags.concepts();
    parts.push(BASELINE_KEYWORD);
    Ok(parts.join(", "))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Intention {
    /// Prompt sent to the text model.
    pub prompt: String,
    pub text: String,
}

/// Style and brushstroke tags with a knowledge entry get its visual
/// characteristics (or definition) spelled out.
fn expansions(tags: &TagSet, kb: &KnowledgeBase) -> Vec<String> {
    tags.tags()
        .iter()
        .filter(|t| matches!(t.dimension, TagDimension::Style | TagDimension::Brushstroke))
        .filter_map(|t| {
            let e = kb.lookup(t.concept())?;
            let detail = if e.visual_characteristics.trim().is_empty() { &e.definition } else { &e.visual_characteristics };
            Some(format!("- {}: {}", t.concept(), detail.trim()))
        })
        .collect()
}

fn intention_prompt(request: &GenerationRequest, kb: &KnowledgeBase) -> String {
    let mut s = String::from(
        "You are a visual designer versed in Chinese painting. Craft a comprehensive design \
         intention for a Chinese-style image from the selections below. Describe the scene, \
         the arrangement of the elements, the mood, the brushwork and the colors in concrete \
         visual terms that an image generation model can follow. Mention every selected tag \
         by name.",
    );
    if !request.tags.is_empty() {
        s.push_str("\n\nSelected tags:");
        for d in TagDimension::ALL {
            let list: Vec<&str> = request.tags.tags().iter().filter(|t| t.dimension == d).map(|t| t.concept()).collect();
            if !list.is_empty() {
                s.push_str(&format!("\n- {}: {}", d.label(), list.join(", ")));
            }
        }
    }
    if let Some(f) = request.free_text() {
        s.push_str(&format!("\n\nDesigner's notes: {f}"));
    }
    let ex = expansions(&request.tags, kb);
    if !ex.is_empty() {
        s.push_str("\n\nPrecise visual characteristics of the style and brushstroke terms:\n");
        s.push_str(&ex.join("\n"));
    }
    s.push_str("\n\nRespond with the design intention as one plain-text paragraph.\n");
    s
}

/// Asks the text model for a design intention. Tag concepts the reply leaves
/// out are appended, so the result always names every selected tag.
pub fn craft_design_intention(
    gateway: &Gateway,
    model: &dyn TextModel,
    request: &GenerationRequest,
    kb: &KnowledgeBase,
) -> Result<Intention, IdeationError> {
    if request.tags.is_empty() && request.free_text().is_none() {
        return Err(IdeationError::EmptyRequest);
    }
    let prompt = intention_prompt(request, kb);
    let raw = gateway.complete(model, &ModelRequest::text(prompt.clone()))?;
    let mut text = raw.trim().trim_matches('`').trim().to_string();
    if text.is_empty() {
        return Err(IdeationError::EmptyIntention);
    }
    let missing: Vec<&str> = request.tags.concepts().into_iter().filter(|c| !text.contains(c)).collect();
    if !missing.is_empty() {
        text.push_str(&format!("\n\nKey elements: {}.", missing.join(", ")));
    }
    Ok(Intention { prompt, text })
}

/// Generates and stores exactly `n` images. A short reply is an error and
/// nothing is returned.
pub fn generate_images(
    gateway: &Gateway,
    generator: &dyn ImageGenerator,
    store: &ImageStore,
    prompt: &str,
    reference: Option<ImageInput>,
    n: usize,
) -> Result<(Vec<String>, String), IdeationError> {
    if n == 0 {
        return Err(IdeationError::InvalidRequest("n must be at least 1".into()));
    }
    let request = ImageRequest { prompt: prompt.to_string(), reference, n };
    let tref = image_transcript_ref(&request);
    let images = gateway.generate_images(generator, &request)?;
    if images.len() < n {
        return Err(IdeationError::ImageCount { wanted: n, got: images.len() });
    }
    let refs = images.iter().take(n).map(|g| store.put_generated(g)).collect::<Result<Vec<_>, _>>()?;
    Ok((refs, tref))
}

const POEM_PROMPT: &str = "You are an expert in matching Chinese poems to Chinese paintings. \
Look at the attached image and consider its visual elements: cultural symbols, composition, \
color, brushwork and emotion. Return an existing classical poem if one fits the image well; \
otherwise compose a new one in the classical style.\n\n\
Respond with a single JSON object and nothing else: \
{\"poem\": string, \"origin\": \"existing\" or \"generated\", \"attribution\": author and title, or null}.\n";

fn parse_poem(raw: &str) -> Poem {
    let from_json = extract_json_body(raw)
        .and_then(|b| serde_json::from_str::<Value>(b).ok())
        .and_then(|v| {
            let text = v.get("poem").or_else(|| v.get("text"))?.as_str()?.trim().to_string();
            let existing = v.get("origin").and_then(Value::as_str).is_some_and(|o| o.eq_ignore_ascii_case("existing"));
            let attribution = v
                .get("attribution")
                .and_then(Value::as_str)
                .map(|s| s.trim().to_string())
                .filter(|s| !s.is_empty());
            Some(Poem {
                text,
                origin: if existing { PoemOrigin::Existing } else { PoemOrigin::Generated },
                attribution: if existing { attribution } else { None },
            })
        });
    match from_json {
        Some(p) if !p.text.is_empty() => p,
        Some(_) => Poem::unavailable(),
        // Replies that ignore the format are taken as the poem itself.
        None if !raw.trim().is_empty() => Poem { text: raw.trim().to_string(), origin: PoemOrigin::Generated, attribution: None },
        None => Poem::unavailable(),
    }
}

/// Poem for an image. Failures degrade to an unavailable poem.
pub fn attach_poem(gateway: &Gateway, model: &dyn TextModel, image: ImageInput) -> (Poem, String) {
    let request = ModelRequest::with_image(POEM_PROMPT, image);
    let tref = text_transcript_ref(&request);
    let poem = match gateway.complete(model, &request) {
        Ok(raw) => parse_poem(&raw),
        Err(e) => {
            tracing::warn!(error = %e, "poem unavailable");
            Poem::unavailable()
        }
    };
    (poem, tref)
}

/// Runs the whole chain for one request: intention (or baseline prompt), then
/// images, then a poem for the first image.
pub fn run_generation(
    ctx: ChainContext<'_>,
    request: &GenerationRequest,
    reference: Option<ImageInput>,
) -> Result<GenerationResult, IdeationError> {
    request.validate()?;
    let mut transcripts = Vec::new();
    let prompt = match request.mode {
        GenerationMode::Crafted => {
            let i = craft_design_intention(ctx.gateway, ctx.text, request, ctx.kb)?;
            transcripts.push(text_transcript_ref(&ModelRequest::text(i.prompt)));
            i.text
        }
        GenerationMode::Baseline => baseline_prompt(&request.tags)?,
    };
    let (images, tref) = generate_images(ctx.gateway, ctx.images, ctx.store, &prompt, reference, request.image_count)?;
    transcripts.push(tref);
    let (poem, pref) = attach_poem(ctx.gateway, ctx.text, ctx.store.input(&images[0])?);
    transcripts.push(pref);
    Ok(GenerationResult { mode: request.mode, design_intention: prompt, images, poem, transcripts })
}

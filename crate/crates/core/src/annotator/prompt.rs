//! Prompt text. The wording is a structural reconstruction: role play,
//! dimension analysis, knowledge injection, then the JSON response contract.

use serde::{Deserialize, Serialize};

use super::knowledge::KnowledgeBase;
use super::AnnotatorError;
use crate::corpus::{AnnotationSet, PaintingRecord, TagDimension};

/// Dimensions requested in the first stage. Style comes in the second.
pub const STAGE_ONE: [TagDimension; 5] = [
    TagDimension::CulturalSymbol,
    TagDimension::Emotion,
    TagDimension::Composition,
    TagDimension::Brushstroke,
    TagDimension::ColorTone,
];

pub const EMPTY_KNOWLEDGE: &str = "Reference knowledge: none.";

const ROLE: &str = "You are a Chinese painting expert with deep knowledge of the history, \
techniques and symbolism of traditional Chinese painting. Act as a connoisseur describing \
the attached painting for a designer who is looking for Chinese-style inspiration.";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationPrompt {
    pub role_section: String,
    pub dimension_section: String,
    pub knowledge_section: String,
    pub format_section: String,
    pub attached_image_ref: String,
}

impl AnnotationPrompt {
    /// Sections in fixed order, separated by blank lines.
    pub fn render(&self) -> String {
        format!(
            "{}\n\n{}\n\n{}\n\n{}\n",
            self.role_section, self.dimension_section, self.knowledge_section, self.format_section
        )
    }

    pub fn sections(&self) -> [&str; 4] {
        [&self.role_section, &self.dimension_section, &self.knowledge_section, &self.format_section]
    }
}

fn dimension_instruction(d: TagDimension) -> &'static str {
    match d {
        TagDimension::CulturalSymbol => {
            "Identify the concrete objects depicted (plants, animals, people, landscape \
             elements, artifacts) and explain what each symbolizes in Chinese culture."
        }
        TagDimension::Emotion => "Describe the emotions and atmosphere the painting conveys.",
        TagDimension::Composition => {
            "Describe how the elements are arranged, including the use of blank space."
        }
        TagDimension::Brushstroke => {
            "Name the brushstroke and ink techniques visible in the painting."
        }
        TagDimension::ColorTone => "Describe the dominant colors and overall tone.",
        TagDimension::Style => {
            "Give short keywords for the overall style of the painting."
        }
    }
}

fn dimension_section(dims: &[TagDimension]) -> String {
    let mut s = String::from("Analyze the painting along the following dimensions:");
    for (i, d) in dims.iter().enumerate() {
        s.push_str(&format!("\n{}. {} ({}): {}", i + 1, d.label(), d.key(), dimension_instruction(*d)));
    }
    s
}

fn format_section(dims: &[TagDimension]) -> String {
    let mut s = String::from(
        "Respond with a single JSON object and nothing else. Use exactly these keys, each \
         mapping to a list:",
    );
    for d in dims {
        s.push_str(&format!("\n- \"{}\"", d.key()));
    }
    s.push_str(
        "\nEach list item is either a short concept string or an object \
         {\"name\": concept, \"description\": explanation}. Use objects for cultural symbols. \
         Keep each concept to a few words naming one thing; do not join concepts with \"and\". \
         Use an empty list when a dimension does not apply.",
    );
    s
}

/// First-stage prompt for one painting.
pub fn build_dimension_prompt(
    record: &PaintingRecord,
    kb: &KnowledgeBase,
) -> Result<AnnotationPrompt, AnnotatorError> {
    if record.image_ref.trim().is_empty() {
        return Err(AnnotatorError::MissingImage(record.id.clone()));
    }
    let entries = kb.entries_for(record.painting_type);
    let knowledge_section = if entries.is_empty() {
        EMPTY_KNOWLEDGE.to_string()
    } else {
        let mut s = String::from(
            "Reference knowledge about Chinese painting. Use it to recognize techniques and \
             symbols; do not mention a technique unless it is visible:",
        );
        for e in entries {
            s.push('\n');
            s.push_str(&e.render());
        }
        s
    };
    let mut role_section = ROLE.to_string();
    if let Some(t) = record.painting_type.to_wire() {
        role_section.push_str(&format!(" The painting is in the {t} manner."));
    }
    Ok(AnnotationPrompt {
        role_section,
        dimension_section: dimension_section(&STAGE_ONE),
        knowledge_section,
        format_section: format_section(&STAGE_ONE),
        attached_image_ref: record.image_ref.clone(),
    })
}

/// Second-stage prompt asking for style keywords given the first-stage tags.
pub fn build_style_prompt(first_stage: &AnnotationSet) -> Result<String, AnnotatorError> {
    if first_stage.is_empty() {
        return Err(AnnotatorError::EmptyFirstStage);
    }
    let mut s = String::from(ROLE);
    s.push_str(
        "\n\nThe painting has already been analyzed. The style of a Chinese painting is shaped \
         by its cultural symbols together with the combined effect of its emotion, composition, \
         brushstroke and color. Analysis so far:",
    );
    for d in STAGE_ONE {
        let tags = first_stage.get(d);
        if tags.is_empty() {
            continue;
        }
        let list: Vec<&str> = tags.iter().map(|t| t.concept()).collect();
        s.push_str(&format!("\n- {}: {}", d.label(), list.join("; ")));
    }
    s.push_str(
        "\n\nGenerate style-related keywords for this painting. Respond with a single JSON \
         object and nothing else: {\"style\": [keyword, ...]}. Return style keywords only.\n",
    );
    Ok(s)
}

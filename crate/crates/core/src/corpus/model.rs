use std::fmt;
use std::str::FromStr;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::annotation::{annotation_to_value, validate_annotation};
use super::CorpusError;

/// The two base painting techniques, plus the pre-classification state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PaintingType {
    Gongbi,
    Xieyi,
    Unknown,
}

impl PaintingType {
    pub fn as_str(self) -> &'static str {
        match self {
            PaintingType::Gongbi => "gongbi",
            PaintingType::Xieyi => "xieyi",
            PaintingType::Unknown => "unknown",
        }
    }

    /// Wire form used by corpus files, where an unclassified record has `null`.
    pub fn to_wire(self) -> Option<&'static str> {
        match self {
            PaintingType::Unknown => None,
            t => Some(t.as_str()),
        }
    }
}

impl fmt::Display for PaintingType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PaintingType {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gongbi" => Ok(PaintingType::Gongbi),
            "xieyi" => Ok(PaintingType::Xieyi),
            "unknown" => Ok(PaintingType::Unknown),
            other => Err(CorpusError::Schema(format!("unknown painting type `{other}`"))),
        }
    }
}

/// The six annotation dimensions, in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TagDimension {
    CulturalSymbol,
    Emotion,
    Composition,
    Style,
    Brushstroke,
    ColorTone,
}

impl TagDimension {
    pub const ALL: [TagDimension; 6] = [
        TagDimension::CulturalSymbol,
        TagDimension::Emotion,
        TagDimension::Composition,
        TagDimension::Style,
        TagDimension::Brushstroke,
        TagDimension::ColorTone,
    ];

    pub fn index(self) -> usize {
        match self {
            TagDimension::CulturalSymbol => 0,
            TagDimension::Emotion => 1,
            TagDimension::Composition => 2,
            TagDimension::Style => 3,
            TagDimension::Brushstroke => 4,
            TagDimension::ColorTone => 5,
        }
    }

    /// Key used in corpus files and annotation documents.
    pub fn key(self) -> &'static str {
        match self {
            TagDimension::CulturalSymbol => "cultural_symbol",
            TagDimension::Emotion => "emotion",
            TagDimension::Composition => "composition",
            TagDimension::Style => "style",
            TagDimension::Brushstroke => "brushstroke",
            TagDimension::ColorTone => "color_tone",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            TagDimension::CulturalSymbol => "Cultural Symbol",
            TagDimension::Emotion => "Emotion",
            TagDimension::Composition => "Composition",
            TagDimension::Style => "Style",
            TagDimension::Brushstroke => "Brushstroke",
            TagDimension::ColorTone => "Color Tone",
        }
    }

    /// Brushstroke and color tone are hidden behind an expander in the UI.
    pub fn is_displayed(self) -> bool {
        !matches!(self, TagDimension::Brushstroke | TagDimension::ColorTone)
    }

    /// Accepts the canonical key plus the aliases models tend to produce.
    pub fn from_key(key: &str) -> Option<TagDimension> {
        let k = key.trim().to_ascii_lowercase().replace([' ', '-'], "_");
        Some(match k.as_str() {
            "cultural_symbol" | "cultural_symbols" | "symbol" | "symbols" => {
                TagDimension::CulturalSymbol
            }
            "emotion" | "emotions" => TagDimension::Emotion,
            "composition" | "compositions" => TagDimension::Composition,
            "style" | "styles" => TagDimension::Style,
            "brushstroke" | "brushstrokes" | "brushwork" | "brush_stroke" | "brush_strokes" => {
                TagDimension::Brushstroke
            }
            "color_tone" | "color_tones" | "colour_tone" | "color" | "colors" | "colour" => {
                TagDimension::ColorTone
            }
            _ => return None,
        })
    }
}

impl fmt::Display for TagDimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for TagDimension {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TagDimension::from_key(s)
            .ok_or_else(|| CorpusError::Schema(format!("unknown tag dimension `{s}`")))
    }
}

/// One annotation concept in one dimension.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "TagWire")]
pub struct Tag {
    pub dimension: TagDimension,
    concept: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub explanation: Option<String>,
}

#[derive(Deserialize)]
struct TagWire {
    dimension: TagDimension,
    concept: String,
    #[serde(default)]
    explanation: Option<String>,
}

impl TryFrom<TagWire> for Tag {
    type Error = CorpusError;
    fn try_from(w: TagWire) -> Result<Tag, CorpusError> {
        let t = Tag::new(w.dimension, &w.concept)?;
        Ok(match w.explanation {
            Some(e) => t.with_explanation(e),
            None => t,
        })
    }
}

impl Tag {
    /// Builds a tag, trimming the concept. Blank concepts are rejected.
    pub fn new(dimension: TagDimension, concept: impl AsRef<str>) -> Result<Tag, CorpusError> {
        let concept = concept.as_ref().trim();
        if concept.is_empty() {
            return Err(CorpusError::Schema(format!(
                "empty concept in dimension `{dimension}`"
            )));
        }
        Ok(Tag {
            dimension,
            concept: concept.to_string(),
            explanation: None,
        })
    }

    pub fn with_explanation(mut self, explanation: impl Into<String>) -> Tag {
        let e = explanation.into();
        let e = e.trim();
        self.explanation = if e.is_empty() { None } else { Some(e.to_string()) };
        self
    }

    pub fn concept(&self) -> &str {
        &self.concept
    }

    pub fn key(&self) -> (TagDimension, &str) {
        (self.dimension, &self.concept)
    }
}

/// Per-dimension tag lists for one painting.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AnnotationSet {
    lists: [Vec<Tag>; 6],
}

impl AnnotationSet {
    pub fn new() -> AnnotationSet {
        AnnotationSet::default()
    }

    /// Inserts a tag unless its (dimension, concept) is already present.
    /// Returns whether the tag was added.
    pub fn insert(&mut self, tag: Tag) -> bool {
        if self.contains(tag.dimension, &tag.concept) {
            return false;
        }
        self.lists[tag.dimension.index()].push(tag);
        true
    }

    pub fn get(&self, dimension: TagDimension) -> &[Tag] {
        &self.lists[dimension.index()]
    }

    pub fn contains(&self, dimension: TagDimension, concept: &str) -> bool {
        self.lists[dimension.index()]
            .iter()
            .any(|t| t.concept == concept)
    }

    /// Replaces one dimension wholesale, dropping duplicates.
    pub fn set_dimension(&mut self, dimension: TagDimension, tags: impl IntoIterator<Item = Tag>) {
        self.lists[dimension.index()].clear();
        for mut t in tags {
            t.dimension = dimension;
            self.insert(t);
        }
    }

    /// All tags, dimension by dimension in canonical order.
    pub fn iter(&self) -> impl Iterator<Item = &Tag> {
        self.lists.iter().flatten()
    }

    pub fn len(&self) -> usize {
        self.lists.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.lists.iter().all(Vec::is_empty)
    }

    /// Copies every tag of `other` not already present.
    pub fn merge(&mut self, other: &AnnotationSet) {
        for t in other.iter() {
            self.insert(t.clone());
        }
    }

    /// Checks the dimension-match and uniqueness invariants.
    pub fn check_invariants(&self) -> Result<(), CorpusError> {
        for dim in TagDimension::ALL {
            let list = self.get(dim);
            for (i, t) in list.iter().enumerate() {
                if t.dimension != dim {
                    return Err(CorpusError::Schema(format!(
                        "tag `{}` filed under `{dim}` but tagged `{}`",
                        t.concept, t.dimension
                    )));
                }
                if t.concept.is_empty() || t.concept.trim() != t.concept {
                    return Err(CorpusError::Schema(format!("untrimmed concept `{}`", t.concept)));
                }
                if list[..i].iter().any(|o| o.concept == t.concept) {
                    return Err(CorpusError::Schema(format!(
                        "duplicate concept `{}` in `{dim}`",
                        t.concept
                    )));
                }
            }
        }
        Ok(())
    }
}

impl Serialize for AnnotationSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        annotation_to_value(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for AnnotationSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let v = serde_json::Value::deserialize(deserializer)?;
        validate_annotation(&v)
            .map(|(set, _)| set)
            .map_err(D::Error::custom)
    }
}

/// One corpus image with its annotations and provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaintingRecord {
    pub id: String,
    pub image_ref: String,
    pub painting_type: PaintingType,
    pub annotations: AnnotationSet,
    pub source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
}

impl PaintingRecord {
    pub fn new(id: impl Into<String>, image_ref: impl Into<String>) -> PaintingRecord {
        PaintingRecord {
            id: id.into(),
            image_ref: image_ref.into(),
            painting_type: PaintingType::Unknown,
            annotations: AnnotationSet::new(),
            source: String::new(),
            description: None,
        }
    }
}

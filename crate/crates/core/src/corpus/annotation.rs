use serde_json::{Map, Value};

use super::model::{AnnotationSet, Tag, TagDimension};
use super::CorpusError;

/// Validates an annotation document and normalizes it into an [`AnnotationSet`].
///
/// The document is an object keyed by dimension name (canonical keys or common
/// aliases such as `symbols` or `brushwork`). Each value must be an array whose
/// entries are either strings or objects carrying a `name` and an optional
/// `description`. Unknown keys and blank entries are reported as warnings.
pub fn validate_annotation(raw: &Value) -> Result<(AnnotationSet, Vec<String>), CorpusError> {
    let obj = raw
        .as_object()
        .ok_or_else(|| CorpusError::Schema("annotation document is not an object".into()))?;

    let mut set = AnnotationSet::new();
    let mut warnings = Vec::new();
    let mut seen_any = false;

    for (key, value) in obj {
        let Some(dim) = TagDimension::from_key(key) else {
            tracing::warn!(key = %key, "ignoring unknown annotation key");
            warnings.push(format!("unknown key `{key}` ignored"));
            continue;
        };
        seen_any = true;
        let Some(entries) = value.as_array() else {
            return Err(CorpusError::Schema(format!(
                "dimension `{key}` must be a list"
            )));
        };
        for entry in entries {
            match parse_entry(dim, entry) {
                Ok(Some(tag)) => {
                    set.insert(tag);
                }
                Ok(None) => warnings.push(format!("blank entry under `{key}` skipped")),
                Err(e) => return Err(CorpusError::Schema(format!("`{key}`: {e}"))),
            }
        }
    }

    if !seen_any {
        return Err(CorpusError::Schema(
            "document has none of the six dimension keys".into(),
        ));
    }
    Ok((set, warnings))
}

fn parse_entry(dim: TagDimension, entry: &Value) -> Result<Option<Tag>, String> {
    match entry {
        Value::String(s) => Ok(Tag::new(dim, s).ok()),
        Value::Object(o) => {
            let name = o
                .get("name")
                .or_else(|| o.get("concept"))
                .or_else(|| o.get("symbol"))
                .and_then(Value::as_str)
                .ok_or_else(|| "object entry without a `name` string".to_string())?;
            let Ok(tag) = Tag::new(dim, name) else {
                return Ok(None);
            };
            let desc = o
                .get("description")
                .or_else(|| o.get("explanation"))
                .and_then(Value::as_str);
            Ok(Some(match desc {
                Some(d) => tag.with_explanation(d),
                None => tag,
            }))
        }
        other => Err(format!("entry of unsupported shape: {other}")),
    }
}

/// Renders an annotation set in the corpus-file shape: every dimension key is
/// present; tags with an explanation become `{name, description}` objects.
pub fn annotation_to_value(set: &AnnotationSet) -> Value {
    let mut map = Map::new();
    for dim in TagDimension::ALL {
        let items = set
            .get(dim)
            .iter()
            .map(|t| match &t.explanation {
                Some(e) => serde_json::json!({ "name": t.concept(), "description": e }),
                None => Value::String(t.concept().to_string()),
            })
            .collect();
        map.insert(dim.key().to_string(), Value::Array(items));
    }
    Value::Object(map)
}

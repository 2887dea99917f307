use std::collections::HashSet;

use serde_json::Value;

use super::{IdeationError, Poem, PoemOrigin, SymbolSuggestion};
use crate::client::{extract_json_body, Gateway, ModelRequest, TextModel};

pub fn build_suggest_prompt(theme: &str, count: usize) -> String {
    format!(
        "You are an expert in Chinese culture and Chinese-style visual design.\n\n\
         Recommend {count} distinct cultural symbols that suit the design theme \"{theme}\". \
         Symbols are concrete objects from Chinese painting and culture (plants, animals, \
         landscape elements, artifacts, figures). For each symbol explain its cultural meaning \
         and how it relates to the theme, and give a related literary reference from classical \
         Chinese texts, preferably a line of poetry.\n\n\
         Respond with a single JSON array and nothing else. Each element is \
         {{\"symbol\": string, \"explanation\": string, \"poem\": string, \"poem_source\": string}} \
         where poem_source names the author and title of an existing poem, or is \"generated\" \
         if you composed the lines.\n"
    )
}

fn text_of(v: &Value, keys: &[&str]) -> Option<String> {
    keys.iter()
        .find_map(|k| v.get(*k).and_then(Value::as_str))
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
}

fn poem_of(item: &Value) -> Option<Poem> {
    let (text, source) = match item.get("poem") {
        Some(Value::Object(_)) => {
            let p = item.get("poem")?;
            (text_of(p, &["text", "lines"])?, text_of(p, &["source", "attribution", "author"]))
        }
        _ => (text_of(item, &["poem", "literary_reference", "reference"])?, text_of(item, &["poem_source", "source"])),
    };
    let (origin, attribution) = match source {
        Some(s) if s.eq_ignore_ascii_case("generated") => (PoemOrigin::Generated, None),
        Some(s) => (PoemOrigin::Existing, Some(s)),
        None => (PoemOrigin::Generated, None),
    };
    Some(Poem { text, origin, attribution })
}

/// Parses a suggestion reply. Items missing a symbol or poem are skipped;
/// symbols repeated case-insensitively keep their first occurrence.
pub fn parse_suggestions(raw: &str, count: usize) -> Result<Vec<SymbolSuggestion>, IdeationError> {
    let fail = |reason: &str| IdeationError::Parse { reason: reason.to_string(), raw: raw.to_string() };
    let body = extract_json_body(raw).ok_or_else(|| fail("no JSON body found"))?;
    let doc: Value = serde_json::from_str(body).map_err(|e| fail(&e.to_string()))?;
    let items = match &doc {
        Value::Array(a) => a.clone(),
        Value::Object(o) => o
            .get("suggestions")
            .or_else(|| o.get("symbols"))
            .and_then(Value::as_array)
            .cloned()
            .ok_or_else(|| fail("expected a list of suggestions"))?,
        _ => return Err(fail("expected a list of suggestions")),
    };

    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for item in &items {
        let Some(symbol) = text_of(item, &["symbol", "name"]) else {
            tracing::warn!("suggestion without symbol skipped");
            continue;
        };
        let Some(poem) = poem_of(item) else {
            tracing::warn!(%symbol, "suggestion without poem skipped");
            continue;
        };
        if !seen.insert(symbol.to_lowercase()) {
            continue;
        }
        let explanation = text_of(item, &["explanation", "meaning", "description"]).unwrap_or_default();
        out.push(SymbolSuggestion { symbol, explanation, poem });
        if out.len() == count {
            break;
        }
    }
    if out.is_empty() {
        return Err(fail("no usable suggestions"));
    }
    if out.len() < count {
        tracing::warn!(wanted = count, got = out.len(), "fewer suggestions than requested");
    }
    Ok(out)
}

/// Asks the model for `count` symbols for a theme. May return fewer when the
/// reply has fewer distinct usable items.
pub fn suggest_symbols(
    gateway: &Gateway,
    model: &dyn TextModel,
    theme: &str,
    count: usize,
) -> Result<Vec<SymbolSuggestion>, IdeationError> {
    let theme = theme.trim();
    if theme.is_empty() {
        return Err(IdeationError::EmptyTheme);
    }
    if count == 0 {
        return Err(IdeationError::ZeroCount);
    }
    let raw = gateway.complete(model, &ModelRequest::text(build_suggest_prompt(theme, count)))?;
    parse_suggestions(&raw, count)
}

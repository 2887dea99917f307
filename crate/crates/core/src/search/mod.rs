//! In-process inverted index over tag concepts and description text.
//!
//! Scoring for a local query with normalized text `q` and token set `Q`:
//!
//! ```text
//! score(r) = 3 * #{tag entries e of r : norm(e.concept) == q}
//!          +     sum over entries e of r of |Q ∩ tokens(e)|
//! ```
//!
//! An entry is one tag or the record's description. Filters remove entries
//! (dimension filter drops other dimensions and the description) or whole
//! records (type filter) before scoring. Records scoring zero are not hits.

mod tokenize;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use tokenize::{is_cjk, normalize_concept, tokenize};

use crate::client::{ClientError, Gateway, OnlineImage, OnlineSource};
use crate::corpus::{CorpusSnapshot, PaintingRecord, PaintingType, TagDimension};

pub const DEFAULT_LIMIT: usize = 30;
pub const EXACT_WEIGHT: f64 = 3.0;
pub const DESCRIPTION_FIELD: &str = "description";

static NEXT_VERSION: AtomicU64 = AtomicU64::new(1);

#[derive(Debug, thiserror::Error)]
pub enum SearchError {
    #[error("empty query text")]
    EmptyQuery,
    #[error("limit must be at least 1")]
    ZeroLimit,
    #[error("online search is not configured")]
    OnlineUnavailable,
    #[error(transparent)]
    Client(#[from] ClientError),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMode {
    #[default]
    Local,
    Online,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchQuery {
    pub text: String,
    #[serde(default)]
    pub mode: SearchMode,
    #[serde(default)]
    pub dimension_filter: Option<TagDimension>,
    #[serde(default)]
    pub type_filter: Option<PaintingType>,
    #[serde(default = "default_limit")]
    pub limit: usize,
}

fn default_limit() -> usize {
    DEFAULT_LIMIT
}

impl SearchQuery {
    pub fn local(text: impl Into<String>) -> SearchQuery {
        SearchQuery {
            text: text.into(),
            mode: SearchMode::Local,
            dimension_filter: None,
            type_filter: None,
            limit: DEFAULT_LIMIT,
        }
    }

    pub fn validate(&self) -> Result<(), SearchError> {
        if self.text.trim().is_empty() {
            return Err(SearchError::EmptyQuery);
        }
        if self.limit == 0 {
            return Err(SearchError::ZeroLimit);
        }
        Ok(())
    }
}

/// Where a match came from: a tag dimension or the description.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Field {
    Tag(TagDimension),
    Description,
}

impl Field {
    pub fn name(&self) -> &'static str {
        match self {
            Field::Tag(d) => d.key(),
            Field::Description => DESCRIPTION_FIELD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedField {
    /// Dimension key, or `"description"`.
    pub field: String,
    /// The matched concept; for descriptions, the matched tokens joined by spaces.
    pub concept: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchHit {
    /// Corpus id for local hits; the image URL for online hits.
    pub record_id: String,
    pub score: f64,
    pub matched_fields: Vec<MatchedField>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub external: Option<OnlineImage>,
}

#[derive(Debug, Clone)]
struct Entry {
    field: Field,
    /// Concept text for tags, empty for descriptions.
    concept: String,
    tokens: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Posting {
    doc: u32,
    entry: u32,
}

/// Immutable inverted index built from one corpus snapshot.
#[derive(Debug)]
pub struct SearchIndex {
    version: u64,
    ids: Vec<String>,
    types: Vec<PaintingType>,
    entries: Vec<Vec<Entry>>,
    doc_lengths: Vec<usize>,
    token_postings: HashMap<String, Vec<Posting>>,
    concept_postings: HashMap<String, Vec<Posting>>,
    /// Exact (dimension, concept) → record ids, ascending.
    tags: HashMap<(TagDimension, String), Vec<String>>,
}

fn record_entries(r: &PaintingRecord) -> Vec<Entry> {
    let mut out: Vec<Entry> = r
        .annotations
        .iter()
        .map(|t| Entry { field: Field::Tag(t.dimension), concept: t.concept().to_string(), tokens: tokenize(t.concept()) })
        .collect();
    if let Some(d) = r.description.as_deref().filter(|d| !d.trim().is_empty()) {
        out.push(Entry { field: Field::Description, concept: String::new(), tokens: tokenize(d) });
    }
    out
}

/// Builds the index. Records are laid out in ascending id order.
pub fn build_index(snapshot: &CorpusSnapshot) -> SearchIndex {
    let mut records: Vec<&PaintingRecord> = snapshot.records().iter().collect();
    records.sort_by(|a, b| a.id.cmp(&b.id));

    let mut index = SearchIndex {
        version: NEXT_VERSION.fetch_add(1, Ordering::Relaxed),
        ids: Vec::with_capacity(records.len()),
        types: Vec::with_capacity(records.len()),
        entries: Vec::with_capacity(records.len()),
        doc_lengths: Vec::with_capacity(records.len()),
        token_postings: HashMap::new(),
        concept_postings: HashMap::new(),
        tags: HashMap::new(),
    };
    for (doc, r) in records.into_iter().enumerate() {
        let entries = record_entries(r);
        for (e, entry) in entries.iter().enumerate() {
            let p = Posting { doc: doc as u32, entry: e as u32 };
            for t in &entry.tokens {
                index.token_postings.entry(t.clone()).or_default().push(p);
            }
            if let Field::Tag(dim) = entry.field {
                index.concept_postings.entry(normalize_concept(&entry.concept)).or_default().push(p);
                let ids = index.tags.entry((dim, entry.concept.clone())).or_default();
                if ids.last() != Some(&r.id) {
                    ids.push(r.id.clone());
                }
            }
        }
        index.doc_lengths.push(entries.iter().map(|e| e.tokens.len()).sum());
        index.ids.push(r.id.clone());
        index.types.push(r.painting_type);
        index.entries.push(entries);
    }
    index
}

impl SearchIndex {
    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn posting_count(&self) -> usize {
        self.token_postings.values().map(Vec::len).sum::<usize>()
            + self.concept_postings.values().map(Vec::len).sum::<usize>()
    }

    /// Record ids whose entries carry `token`.
    pub fn token_docs(&self, token: &str) -> Vec<&str> {
        let mut docs: Vec<u32> = self
            .token_postings
            .get(token)
            .map(|ps| ps.iter().map(|p| p.doc).collect())
            .unwrap_or_default();
        docs.dedup();
        docs.into_iter().map(|d| self.ids[d as usize].as_str()).collect()
    }

    pub fn doc_length(&self, record_id: &str) -> Option<usize> {
        self.ids
            .binary_search_by(|id| id.as_str().cmp(record_id))
            .ok()
            .map(|i| self.doc_lengths[i])
    }

    pub fn record_ids(&self) -> &[String] {
        &self.ids
    }

    fn admits(&self, doc: usize, entry: &Entry, q: &SearchQuery) -> bool {
        if let Some(t) = q.type_filter {
            if self.types[doc] != t {
                return false;
            }
        }
        match (q.dimension_filter, entry.field) {
            (None, _) => true,
            (Some(d), Field::Tag(e)) => d == e,
            (Some(_), Field::Description) => false,
        }
    }

    /// Local search through the postings.
    pub fn search_local(&self, q: &SearchQuery) -> Result<Vec<SearchHit>, SearchError> {
        q.validate()?;
        let q_norm = normalize_concept(&q.text);
        let q_tokens: BTreeSet<String> = tokenize(&q.text).into_iter().collect();

        // (doc, entry) → (exact, token matches)
        let mut acc: BTreeMap<(u32, u32), (u32, Vec<&str>)> = BTreeMap::new();
        if let Some(ps) = self.concept_postings.get(&q_norm) {
            for p in ps {
                acc.entry((p.doc, p.entry)).or_default().0 += 1;
            }
        }
        for t in &q_tokens {
            if let Some(ps) = self.token_postings.get(t) {
                for p in ps {
                    acc.entry((p.doc, p.entry)).or_default().1.push(t.as_str());
                }
            }
        }

        let mut per_doc: BTreeMap<u32, (f64, Vec<MatchedField>)> = BTreeMap::new();
        for ((doc, e), (exact, toks)) in acc {
            let entry = &self.entries[doc as usize][e as usize];
            if !self.admits(doc as usize, entry, q) {
                continue;
            }
            let s = EXACT_WEIGHT * exact as f64 + toks.len() as f64;
            let slot = per_doc.entry(doc).or_insert((0.0, Vec::new()));
            slot.0 += s;
            slot.1.push(MatchedField {
                field: entry.field.name().to_string(),
                concept: match entry.field {
                    Field::Tag(_) => entry.concept.clone(),
                    Field::Description => toks.join(" "),
                },
            });
        }

        let mut hits: Vec<SearchHit> = per_doc
            .into_iter()
            .filter(|(_, (s, _))| *s > 0.0)
            .map(|(doc, (score, matched_fields))| SearchHit {
                record_id: self.ids[doc as usize].clone(),
                score,
                matched_fields,
                external: None,
            })
            .collect();
        sort_hits(&mut hits);
        hits.truncate(q.limit);
        Ok(hits)
    }

    /// Records carrying exactly `(dimension, concept)`, ascending by id.
    pub fn tag_lookup(&self, dimension: TagDimension, concept: &str) -> Vec<String> {
        self.tags.get(&(dimension, concept.to_string())).cloned().unwrap_or_default()
    }
}

/// Score descending, then record id ascending.
pub fn sort_hits(hits: &mut [SearchHit]) {
    hits.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.record_id.cmp(&b.record_id)));
}

/// Online backend for [`search`].
pub struct OnlineBackend<'a> {
    pub gateway: &'a Gateway,
    pub source: &'a dyn OnlineSource,
}

/// Runs a query in its mode. Online queries need a backend.
pub fn search(
    index: &SearchIndex,
    query: &SearchQuery,
    online: Option<&OnlineBackend<'_>>,
) -> Result<Vec<SearchHit>, SearchError> {
    query.validate()?;
    match query.mode {
        SearchMode::Local => index.search_local(query),
        SearchMode::Online => {
            let backend = online.ok_or(SearchError::OnlineUnavailable)?;
            let results = backend.gateway.online_search(backend.source, query.text.trim(), query.limit)?;
            Ok(results
                .into_iter()
                .take(query.limit)
                .map(|img| SearchHit {
                    record_id: img.image_url.clone(),
                    score: 0.0,
                    matched_fields: Vec::new(),
                    external: Some(img),
                })
                .collect())
        }
    }
}

/// Holds the current index; rebuilds swap in atomically.
#[derive(Debug)]
pub struct IndexHandle {
    current: std::sync::RwLock<Arc<SearchIndex>>,
}

impl IndexHandle {
    pub fn new(index: SearchIndex) -> IndexHandle {
        IndexHandle { current: std::sync::RwLock::new(Arc::new(index)) }
    }

    pub fn current(&self) -> Arc<SearchIndex> {
        self.current.read().expect("index lock").clone()
    }

    pub fn rebuild(&self, snapshot: &CorpusSnapshot) -> u64 {
        let next = Arc::new(build_index(snapshot));
        let v = next.version();
        *self.current.write().expect("index lock") = next;
        v
    }
}

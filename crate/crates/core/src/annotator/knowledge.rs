use std::collections::HashSet;
use std::io::BufRead;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};

use super::AnnotatorError;
use crate::corpus::PaintingType;

/// Which painting types a knowledge entry applies to.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Applicability {
    Gongbi,
    Xieyi,
    #[default]
    Both,
}

impl Applicability {
    /// Unknown painting types see every entry.
    pub fn admits(self, t: PaintingType) -> bool {
        match (self, t) {
            (Applicability::Both, _) | (_, PaintingType::Unknown) => true,
            (Applicability::Gongbi, PaintingType::Gongbi) => true,
            (Applicability::Xieyi, PaintingType::Xieyi) => true,
            _ => false,
        }
    }
}

/// One technique or motif description injected into annotation prompts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnowledgeEntry {
    pub term: String,
    pub definition: String,
    #[serde(default)]
    pub visual_characteristics: String,
    #[serde(default)]
    pub usage_scenarios: String,
    #[serde(default)]
    pub applicable_types: Applicability,
}

impl KnowledgeEntry {
    /// Single-line rendering used inside prompts.
    pub fn render(&self) -> String {
        let mut s = format!("- {}: {}", self.term, self.definition.trim());
        if !self.visual_characteristics.trim().is_empty() {
            s.push_str(&format!(" Visual characteristics: {}", self.visual_characteristics.trim()));
        }
        if !self.usage_scenarios.trim().is_empty() {
            s.push_str(&format!(" Usage: {}", self.usage_scenarios.trim()));
        }
        match self.applicable_types {
            Applicability::Gongbi => s.push_str(" (commonly used in gongbi)"),
            Applicability::Xieyi => s.push_str(" (commonly used in xieyi)"),
            Applicability::Both => {}
        }
        s
    }
}

/// Flat, maintainer-editable knowledge base. Reads are counted so callers can
/// check which paths consult it.
#[derive(Debug, Default)]
pub struct KnowledgeBase {
    entries: Vec<KnowledgeEntry>,
    reads: AtomicUsize,
}

impl Clone for KnowledgeBase {
    fn clone(&self) -> Self {
        KnowledgeBase { entries: self.entries.clone(), reads: AtomicUsize::new(0) }
    }
}

impl KnowledgeBase {
    pub fn new(entries: Vec<KnowledgeEntry>) -> Result<KnowledgeBase, AnnotatorError> {
        let mut seen = HashSet::new();
        for e in &entries {
            if e.term.trim().is_empty() {
                return Err(AnnotatorError::Knowledge("entry with empty term".into()));
            }
            if !seen.insert(e.term.trim().to_lowercase()) {
                return Err(AnnotatorError::Knowledge(format!("duplicate term `{}`", e.term)));
            }
        }
        Ok(KnowledgeBase { entries, reads: AtomicUsize::new(0) })
    }

    pub fn empty() -> KnowledgeBase {
        KnowledgeBase::default()
    }

    /// Reads one JSON entry per line; blank lines and `#` comments are skipped.
    pub fn from_reader(reader: impl BufRead) -> Result<KnowledgeBase, AnnotatorError> {
        let mut entries = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| AnnotatorError::Knowledge(e.to_string()))?;
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let e: KnowledgeEntry = serde_json::from_str(t)
                .map_err(|e| AnnotatorError::Knowledge(format!("line {}: {e}", i + 1)))?;
            entries.push(e);
        }
        KnowledgeBase::new(entries)
    }

    pub fn load(path: &Path) -> Result<KnowledgeBase, AnnotatorError> {
        let f = std::fs::File::open(path)
            .map_err(|e| AnnotatorError::Knowledge(format!("{}: {e}", path.display())))?;
        KnowledgeBase::from_reader(std::io::BufReader::new(f))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries applicable to a painting type, in file order.
    pub fn entries_for(&self, t: PaintingType) -> Vec<&KnowledgeEntry> {
        self.reads.fetch_add(1, Ordering::Relaxed);
        self.entries.iter().filter(|e| e.applicable_types.admits(t)).collect()
    }

    /// Case-insensitive term lookup.
    pub fn lookup(&self, term: &str) -> Option<&KnowledgeEntry> {
        self.reads.fetch_add(1, Ordering::Relaxed);
        let t = term.trim().to_lowercase();
        self.entries.iter().find(|e| e.term.trim().to_lowercase() == t)
    }

    /// Number of `entries_for`/`lookup` calls so far.
    pub fn access_count(&self) -> usize {
        self.reads.load(Ordering::Relaxed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(term: &str, a: Applicability) -> KnowledgeEntry {
        KnowledgeEntry {
            term: term.into(),
            definition: "d".into(),
            visual_characteristics: String::new(),
            usage_scenarios: String::new(),
            applicable_types: a,
        }
    }

    #[test]
    fn filtering_by_type() {
        let kb = KnowledgeBase::new(vec![
            entry("splashed ink", Applicability::Xieyi),
            entry("fine line", Applicability::Gongbi),
            entry("dotting moss", Applicability::Both),
        ])
        .unwrap();
        let terms = |t| kb.entries_for(t).iter().map(|e| e.term.clone()).collect::<Vec<_>>();
        assert_eq!(terms(PaintingType::Gongbi), vec!["fine line", "dotting moss"]);
        assert_eq!(terms(PaintingType::Xieyi), vec!["splashed ink", "dotting moss"]);
        assert_eq!(terms(PaintingType::Unknown).len(), 3);
        assert_eq!(kb.access_count(), 3);
    }

    #[test]
    fn duplicate_terms_rejected() {
        let err = KnowledgeBase::new(vec![entry("A", Applicability::Both), entry("a ", Applicability::Xieyi)]);
        assert!(err.is_err());
    }

    #[test]
    fn jsonl_loading() {
        let text = "# techniques\n{\"term\":\"splashed ink\",\"definition\":\"ink flung freely\",\"applicable_types\":\"xieyi\"}\n\n";
        let kb = KnowledgeBase::from_reader(text.as_bytes()).unwrap();
        assert_eq!(kb.len(), 1);
        assert!(kb.lookup("Splashed Ink").unwrap().render().ends_with("(commonly used in xieyi)"));
        assert!(KnowledgeBase::from_reader("{bad".as_bytes()).is_err());
    }
}

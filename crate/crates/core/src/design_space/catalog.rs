use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::clusters::ClusterSet;
use super::normalize::{normalize_concepts, ConceptNormalizationRules};
use super::DesignSpaceError;
use crate::corpus::{PaintingRecord, TagDimension};

/// Dimensions grouped into categories; the rest stay flat concept lists.
pub const CLUSTERED: [TagDimension; 2] = [TagDimension::CulturalSymbol, TagDimension::Emotion];

/// Category label used for a flat dimension's single entry.
pub const FLAT_LABEL: &str = "-";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryEntry {
    pub label: String,
    /// May be omitted in summary-only catalogs; when present its length must
    /// equal `concept_count`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub concepts: Vec<String>,
    pub concept_count: usize,
    /// Paintings containing at least one concept of the category. Flat
    /// dimensions carry none.
    #[serde(default)]
    pub painting_count: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimensionEntry {
    pub clustered: bool,
    pub categories: Vec<CategoryEntry>,
}

/// Dimension → category → counts, in the shape of the mined design-space table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DesignSpaceCatalog {
    pub corpus_total: usize,
    pub dimensions: BTreeMap<TagDimension, DimensionEntry>,
}

impl DesignSpaceCatalog {
    pub fn dimension(&self, dim: TagDimension) -> Option<&DimensionEntry> {
        self.dimensions.get(&dim)
    }

    /// Every concept listed under a dimension, across categories.
    pub fn concepts(&self, dim: TagDimension) -> Vec<&str> {
        self.dimension(dim)
            .map(|d| d.categories.iter().flat_map(|c| c.concepts.iter().map(String::as_str)).collect())
            .unwrap_or_default()
    }

    pub fn validate(&self) -> Result<(), DesignSpaceError> {
        for (dim, entry) in &self.dimensions {
            let mut seen = HashSet::new();
            let mut labels = HashSet::new();
            for c in &entry.categories {
                if !labels.insert(c.label.as_str()) {
                    return Err(DesignSpaceError::Catalog(format!("duplicate category `{}` in `{dim}`", c.label)));
                }
                if !c.concepts.is_empty() && c.concepts.len() != c.concept_count {
                    return Err(DesignSpaceError::Catalog(format!(
                        "`{dim}/{}` lists {} concepts but counts {}",
                        c.label,
                        c.concepts.len(),
                        c.concept_count
                    )));
                }
                if let Some(p) = c.painting_count {
                    if p > self.corpus_total {
                        return Err(DesignSpaceError::Catalog(format!(
                            "`{dim}/{}` counts {p} paintings in a corpus of {}",
                            c.label, self.corpus_total
                        )));
                    }
                }
                for m in &c.concepts {
                    if !seen.insert(m.as_str()) {
                        return Err(DesignSpaceError::Catalog(format!("concept `{m}` listed twice in `{dim}`")));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("catalog serializes")
    }

    pub fn from_json(text: &str) -> Result<DesignSpaceCatalog, DesignSpaceError> {
        let c: DesignSpaceCatalog =
            serde_json::from_str(text).map_err(|e| DesignSpaceError::Catalog(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<DesignSpaceCatalog, DesignSpaceError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| DesignSpaceError::Catalog(format!("{}: {e}", path.display())))?;
        DesignSpaceCatalog::from_json(&text)
    }

    pub fn save(&self, path: &Path) -> Result<(), DesignSpaceError> {
        crate::fsutil::write_atomic(path, self.to_json().as_bytes())
            .map_err(|e| DesignSpaceError::Catalog(format!("{}: {e}", path.display())))
    }
}

/// Normalized concepts of one record in one clustered dimension.
fn record_concepts(
    record: &PaintingRecord,
    dim: TagDimension,
    rules: &ConceptNormalizationRules,
) -> Vec<String> {
    let raw: Vec<String> = record.annotations.get(dim).iter().map(|t| t.concept().to_string()).collect();
    normalize_concepts(&raw, rules)
}

/// Builds the catalog for a corpus.
///
/// Clustered dimensions get one category per cluster, counting paintings whose
/// normalized concepts hit any member. Every normalized concept in the corpus
/// must belong to some cluster. Flat dimensions list their distinct concepts
/// in sorted order.
pub fn build_catalog(
    records: &[PaintingRecord],
    clusters: &ClusterSet,
    rules: &ConceptNormalizationRules,
) -> Result<DesignSpaceCatalog, DesignSpaceError> {
    clusters.check_invariants()?;
    let mut dimensions = BTreeMap::new();

    for dim in CLUSTERED {
        let member_of: HashMap<&str, usize> = clusters
            .in_dimension(dim)
            .enumerate()
            .flat_map(|(i, c)| c.members.iter().map(move |m| (m.as_str(), i)))
            .collect();
        let mut hits: Vec<usize> = vec![0; clusters.in_dimension(dim).count()];
        let mut uncovered = BTreeSet::new();
        for r in records {
            let mut touched = BTreeSet::new();
            for c in record_concepts(r, dim, rules) {
                match member_of.get(c.as_str()) {
                    Some(&i) => {
                        touched.insert(i);
                    }
                    None => {
                        uncovered.insert(c);
                    }
                }
            }
            for i in touched {
                hits[i] += 1;
            }
        }
        if !uncovered.is_empty() {
            let sample: Vec<_> = uncovered.iter().take(5).cloned().collect();
            return Err(DesignSpaceError::Catalog(format!(
                "{} `{dim}` concepts are not in any cluster (e.g. {sample:?})",
                uncovered.len()
            )));
        }
        let categories = clusters
            .in_dimension(dim)
            .zip(hits)
            .map(|(c, n)| CategoryEntry {
                label: c.label.clone(),
                concepts: c.members.clone(),
                concept_count: c.members.len(),
                painting_count: Some(n),
            })
            .collect();
        dimensions.insert(dim, DimensionEntry { clustered: true, categories });
    }

    for dim in TagDimension::ALL.into_iter().filter(|d| !CLUSTERED.contains(d)) {
        let concepts: BTreeSet<String> = records
            .iter()
            .flat_map(|r| r.annotations.get(dim).iter().map(|t| t.concept().to_string()))
            .collect();
        dimensions.insert(
            dim,
            DimensionEntry {
                clustered: false,
                categories: vec![CategoryEntry {
                    label: FLAT_LABEL.into(),
                    concept_count: concepts.len(),
                    concepts: concepts.into_iter().collect(),
                    painting_count: None,
                }],
            },
        );
    }

    let catalog = DesignSpaceCatalog { corpus_total: records.len(), dimensions };
    catalog.validate()?;
    Ok(catalog)
}

//! Mining the design space: concept cleanup, embedding, clustering and the
//! category catalog.

mod catalog;
mod clusters;
mod embed;
mod kmeans;
mod normalize;

use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

pub use catalog::{
    build_catalog, CategoryEntry, DesignSpaceCatalog, DimensionEntry, CLUSTERED, FLAT_LABEL,
};
pub use clusters::{adjust_clusters, ClusterEdit, ClusterSet, ConceptCluster};
pub use embed::ConceptEmbedder;
pub use kmeans::{choose_k, kmeans, lloyd, wcss, ElbowChoice, KMeansResult, ELBOW_RESTARTS, MAX_ITERATIONS};
pub use normalize::{normalize_concepts, ConceptNormalizationRules};

use crate::client::{ClientError, Embedder, Gateway};
use crate::corpus::{PaintingRecord, TagDimension};

#[derive(Debug, thiserror::Error)]
pub enum DesignSpaceError {
    #[error("k = {k} is outside [1, {n}]")]
    InvalidK { k: usize, n: usize },
    #[error("no elbow: zero variance")]
    NoElbow,
    #[error("shape error: {0}")]
    Shape(String),
    #[error("embedding for `{0}` has zero norm")]
    ZeroVector(String),
    #[error("configuration: {0}")]
    Config(String),
    #[error("clusters: {0}")]
    Cluster(String),
    #[error("catalog: {0}")]
    Catalog(String),
    #[error(transparent)]
    Client(#[from] ClientError),
}

/// Per-dimension settings for [`mine`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MiningConfig {
    pub k_range: RangeInclusive<usize>,
    /// Overrides the elbow choice when set.
    pub k_override: Option<usize>,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for MiningConfig {
    fn default() -> Self {
        MiningConfig { k_range: 2..=12, k_override: None, restarts: 10, seed: 0 }
    }
}

/// What [`mine`] produced for one clustered dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionMining {
    pub dimension: TagDimension,
    pub concepts: Vec<String>,
    pub elbow: Option<ElbowChoice>,
    pub k: usize,
    pub wcss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiningOutput {
    pub clusters: ClusterSet,
    pub catalog: DesignSpaceCatalog,
    pub dimensions: Vec<DimensionMining>,
}

/// Normalizes, embeds and clusters the clustered dimensions of a corpus and
/// builds the catalog with machine-assigned `cluster-<i>` labels.
///
/// The k range is clamped to the number of concepts; with fewer than three
/// candidate k values the elbow search is skipped and the largest k used.
pub fn mine(
    records: &[PaintingRecord],
    rules: &ConceptNormalizationRules,
    gateway: &Gateway,
    embedder: &dyn Embedder,
    config: &MiningConfig,
) -> Result<MiningOutput, DesignSpaceError> {
    let mut emb = ConceptEmbedder::new(gateway, embedder);
    let mut clusters = ClusterSet::default();
    let mut dims = Vec::new();

    for dim in CLUSTERED {
        let raw: Vec<String> = records
            .iter()
            .flat_map(|r| r.annotations.get(dim).iter().map(|t| t.concept().to_string()))
            .collect();
        let concepts = normalize_concepts(&raw, rules);
        if concepts.is_empty() {
            continue;
        }
        let points = emb.embed_concepts(&concepts)?;
        let n = concepts.len();
        let lo = (*config.k_range.start()).clamp(1, n);
        let hi = (*config.k_range.end()).clamp(lo, n);

        let elbow = if config.k_override.is_none() && hi - lo + 1 >= 3 {
            match choose_k(&points, lo..=hi, config.seed) {
                Ok(e) => Some(e),
                Err(DesignSpaceError::NoElbow) => None,
                Err(e) => return Err(e),
            }
        } else {
            None
        };
        let k = config
            .k_override
            .map(|k| k.clamp(1, n))
            .or(elbow.as_ref().map(|e| e.k))
            .unwrap_or(hi);
        let run = kmeans(&points, k, config.seed, config.restarts)?;
        tracing::info!(dimension = %dim, concepts = n, k, wcss = run.wcss, "clustered");
        clusters.extend(ClusterSet::from_assignments(dim, &concepts, &run.assignments));
        dims.push(DimensionMining { dimension: dim, concepts, elbow, k, wcss: run.wcss });
    }

    let catalog = build_catalog(records, &clusters, rules)?;
    Ok(MiningOutput { clusters, catalog, dimensions: dims })
}

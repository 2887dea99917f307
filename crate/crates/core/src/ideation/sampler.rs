use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{IdeationError, TagSet};
use crate::corpus::{Tag, TagDimension};
use crate::design_space::DesignSpaceCatalog;

/// Two tags are drawn from each of these.
pub const MANDATORY: [TagDimension; 3] = [TagDimension::CulturalSymbol, TagDimension::Emotion, TagDimension::Style];

/// Each contributes one tag with probability [`OPTIONAL_PROBABILITY`].
pub const OPTIONAL: [TagDimension; 3] = [TagDimension::ColorTone, TagDimension::Brushstroke, TagDimension::Composition];

pub const OPTIONAL_PROBABILITY: f64 = 0.5;

/// Draws one evaluation tag set. Draws are uniform without replacement within
/// a dimension. An optional dimension that comes up but has no concepts in the
/// catalog contributes nothing.
pub fn sample_eval_tagset(catalog: &DesignSpaceCatalog, seed: u64) -> Result<TagSet, IdeationError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tags = Vec::with_capacity(9);
    for dim in MANDATORY {
        let pool = catalog.concepts(dim);
        if pool.len() < 2 {
            return Err(IdeationError::Sampler(format!(
                "`{dim}` needs at least 2 concepts, catalog has {}",
                pool.len()
            )));
        }
        for i in sample(&mut rng, pool.len(), 2) {
            tags.push(Tag::new(dim, pool[i]).map_err(|e| IdeationError::Sampler(e.to_string()))?);
        }
    }
    for dim in OPTIONAL {
        if !rng.random_bool(OPTIONAL_PROBABILITY) {
            continue;
        }
        let pool = catalog.concepts(dim);
        if pool.is_empty() {
            continue;
        }
        let i = rng.random_range(0..pool.len());
        tags.push(Tag::new(dim, pool[i]).map_err(|e| IdeationError::Sampler(e.to_string()))?);
    }
    TagSet::new(tags)
}

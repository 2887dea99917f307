use std::collections::HashMap;

use crate::client::{Embedder, Gateway};

use super::DesignSpaceError;

/// Embeds concepts through an endpoint, caching by concept string so each
/// distinct concept is sent at most once per cache lifetime.
pub struct ConceptEmbedder<'a> {
    gateway: &'a Gateway,
    client: &'a dyn Embedder,
    cache: HashMap<String, Vec<f64>>,
}

impl<'a> ConceptEmbedder<'a> {
    pub fn new(gateway: &'a Gateway, client: &'a dyn Embedder) -> ConceptEmbedder<'a> {
        ConceptEmbedder { gateway, client, cache: HashMap::new() }
    }

    pub fn cached(&self) -> usize {
        self.cache.len()
    }

    /// One L2-normalized row per input concept. Uncached concepts go out in a
    /// single batched call.
    pub fn embed_concepts(&mut self, concepts: &[String]) -> Result<Vec<Vec<f64>>, DesignSpaceError> {
        if concepts.is_empty() {
            return Err(DesignSpaceError::Config("no concepts to embed".into()));
        }
        let mut missing: Vec<String> = Vec::new();
        for c in concepts {
            if !self.cache.contains_key(c) && !missing.contains(c) {
                missing.push(c.clone());
            }
        }
        if !missing.is_empty() {
            let vectors = self.gateway.embed(self.client, &missing)?;
            if vectors.len() != missing.len() {
                return Err(DesignSpaceError::Shape(format!(
                    "{} vectors for {} concepts",
                    vectors.len(),
                    missing.len()
                )));
            }
            for (c, v) in missing.into_iter().zip(vectors) {
                let v = unit(&v).ok_or_else(|| DesignSpaceError::ZeroVector(c.clone()))?;
                self.cache.insert(c, v);
            }
        }
        Ok(concepts.iter().map(|c| self.cache[c].clone()).collect())
    }
}

fn unit(v: &[f32]) -> Option<Vec<f64>> {
    if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
        return None;
    }
    let norm = v.iter().map(|&x| (x as f64) * (x as f64)).sum::<f64>().sqrt();
    (norm > 0.0).then(|| v.iter().map(|&x| x as f64 / norm).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::client::mock::{FailingModel, HashEmbedder};

    #[test]
    fn repeats_cost_one_call() {
        let gw = Gateway::for_tests();
        let e = HashEmbedder::new(16);
        let mut emb = ConceptEmbedder::new(&gw, &e);
        let rows = emb.embed_concepts(&["freedom".into(), "freedom".into()]).unwrap();
        assert_eq!(rows[0], rows[1]);
        assert_eq!(e.calls(), 1);
        emb.embed_concepts(&["freedom".into()]).unwrap();
        assert_eq!(e.calls(), 1);
    }

    #[test]
    fn rows_are_unit_length() {
        let gw = Gateway::for_tests();
        let e = HashEmbedder::new(33);
        let mut emb = ConceptEmbedder::new(&gw, &e);
        let concepts: Vec<String> = (0..20).map(|i| format!("c{i}")).collect();
        for row in emb.embed_concepts(&concepts).unwrap() {
            let n: f64 = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((n - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn endpoint_failure_surfaces() {
        let gw = Gateway::for_tests();
        let f = FailingModel::new("down");
        let mut emb = ConceptEmbedder::new(&gw, &f);
        assert!(matches!(
            emb.embed_concepts(&["x".into()]),
            Err(DesignSpaceError::Client(_))
        ));
        assert_eq!(f.calls(), 4);
    }
}

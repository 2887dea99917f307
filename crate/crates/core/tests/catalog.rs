use std::path::PathBuf;

use guohua_core::client::mock::HashEmbedder;
use guohua_core::client::Gateway;
use guohua_core::corpus::TagDimension;
use guohua_core::design_space::{
    build_catalog, mine, ClusterSet, ConceptNormalizationRules, DesignSpaceCatalog, MiningConfig, CLUSTERED, FLAT_LABEL,
};
use guohua_testkit::{recount_clusters, recount_flat, synthetic_corpus};

fn summary_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("config/design_space_summary.json")
}

fn check_against_recount(records: &[guohua_core::corpus::PaintingRecord], clusters: &ClusterSet, catalog: &DesignSpaceCatalog) {
    let rules = ConceptNormalizationRules::default();
    assert_eq!(catalog.corpus_total, records.len());
    for dim in CLUSTERED {
        let got: Vec<(String, usize, usize)> = catalog
            .dimension(dim)
            .unwrap()
            .categories
            .iter()
            .map(|c| (c.label.clone(), c.concept_count, c.painting_count.unwrap()))
            .collect();
        assert_eq!(got, recount_clusters(records, clusters, dim, &rules), "{dim:?}");
    }
    for dim in TagDimension::ALL.into_iter().filter(|d| !CLUSTERED.contains(d)) {
        let cats = &catalog.dimension(dim).unwrap().categories;
        assert_eq!(cats.len(), 1);
        assert_eq!(cats[0].label, FLAT_LABEL);
        assert_eq!(cats[0].painting_count, None);
        assert_eq!(cats[0].concept_count, recount_flat(records, dim), "{dim:?}");
    }
}

#[test]
fn mined_counts_equal_brute_force() {
    let records = synthetic_corpus(31, 200);
    let gw = Gateway::for_tests();
    let emb = HashEmbedder::new(24);
    for k in [None, Some(1), Some(4)] {
        let config = MiningConfig { k_override: k, seed: 2, ..MiningConfig::default() };
        let out = mine(&records, &ConceptNormalizationRules::default(), &gw, &emb, &config).unwrap();
        check_against_recount(&records, &out.clusters, &out.catalog);
        if let Some(k) = k {
            assert_eq!(out.catalog.dimension(TagDimension::CulturalSymbol).unwrap().categories.len(), k);
        }
    }
}

#[test]
fn hand_made_clusters_equal_brute_force() {
    let records = synthetic_corpus(32, 200);
    let rules = ConceptNormalizationRules::default();
    let mut clusters = ClusterSet::default();
    for dim in CLUSTERED {
        let raw: Vec<String> =
            records.iter().flat_map(|r| r.annotations.get(dim).iter().map(|t| t.concept().to_string())).collect();
        let concepts = guohua_core::design_space::normalize_concepts(&raw, &rules);
        // alternate members between two clusters
        let assignments: Vec<usize> = (0..concepts.len()).map(|i| i % 2).collect();
        clusters.extend(ClusterSet::from_assignments(dim, &concepts, &assignments));
    }
    let catalog = build_catalog(&records, &clusters, &rules).unwrap();
    check_against_recount(&records, &clusters, &catalog);
    let back = DesignSpaceCatalog::from_json(&catalog.to_json()).unwrap();
    assert_eq!(back, catalog);
}

#[test]
fn uncovered_concepts_are_rejected() {
    let records = synthetic_corpus(33, 50);
    let err = build_catalog(&records, &ClusterSet::default(), &ConceptNormalizationRules::default()).unwrap_err();
    assert!(err.to_string().contains("not in any cluster"), "{err}");
}

#[test]
fn summary_file_round_trips_losslessly() {
    let text = std::fs::read_to_string(summary_path()).unwrap();
    let catalog = DesignSpaceCatalog::load(&summary_path()).unwrap();
    assert_eq!(catalog.corpus_total, 16315);

    let counts = |dim| -> Vec<(String, usize, Option<usize>)> {
        catalog
            .dimension(dim)
            .unwrap()
            .categories
            .iter()
            .map(|c| (c.label.clone(), c.concept_count, c.painting_count))
            .collect()
    };
    let s = |x: &str| x.to_string();
    assert_eq!(
        counts(TagDimension::CulturalSymbol),
        vec![
            (s("Natural Landscape"), 190, Some(3390)),
            (s("Plants"), 371, Some(11877)),
            (s("Human and Life"), 693, Some(7405)),
            (s("Animals"), 211, Some(6833)),
        ]
    );
    assert_eq!(
        counts(TagDimension::Emotion),
        vec![
            (s("Praise for Nature"), 757, Some(8141)),
            (s("Soul of Human Life"), 1186, Some(11843)),
            (s("Peaceful Atmosphere"), 708, Some(4284)),
            (s("Understanding Life"), 1387, Some(8387)),
            (s("Philosophical Reflection"), 865, Some(4832)),
        ]
    );
    for (dim, n) in [
        (TagDimension::Style, 4162),
        (TagDimension::Composition, 145),
        (TagDimension::Brushstroke, 177),
        (TagDimension::ColorTone, 816),
    ] {
        assert_eq!(counts(dim), vec![(s(FLAT_LABEL), n, None)]);
    }

    // lossless at the JSON value level and through a save/load cycle
    let original: serde_json::Value = serde_json::from_str(&text).unwrap();
    let reserialized: serde_json::Value = serde_json::from_str(&catalog.to_json()).unwrap();
    assert_eq!(original, reserialized);
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("catalog.json");
    catalog.save(&p).unwrap();
    assert_eq!(DesignSpaceCatalog::load(&p).unwrap(), catalog);
}

#[test]
fn inconsistent_catalogs_are_rejected() {
    let bad_count = r#"{"corpus_total": 2, "dimensions": {"style": {"clustered": false,
        "categories": [{"label": "-", "concepts": ["a"], "concept_count": 2}]}}}"#;
    assert!(DesignSpaceCatalog::from_json(bad_count).is_err());
    let too_many = r#"{"corpus_total": 2, "dimensions": {"emotion": {"clustered": true,
        "categories": [{"label": "x", "concept_count": 1, "painting_count": 3}]}}}"#;
    assert!(DesignSpaceCatalog::from_json(too_many).is_err());
}

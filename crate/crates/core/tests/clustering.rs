use guohua_core::client::mock::HashEmbedder;
use guohua_core::client::Gateway;
use guohua_core::corpus::{PaintingRecord, Tag, TagDimension};
use guohua_core::design_space::{
    adjust_clusters, choose_k, kmeans, mine, wcss, ClusterEdit, ConceptNormalizationRules, MiningConfig,
};
use guohua_testkit::{adjusted_rand_index, blobs, exhaustive_min_wcss, rng};
use rand::Rng;

fn three_blobs(seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
    blobs(seed, &[vec![0.0, 0.0], vec![10.0, 0.0], vec![5.0, 8.0]], 30, 1.0)
}

#[test]
fn elbow_finds_three_blobs() {
    for seed in [1, 2, 3] {
        let (points, labels) = three_blobs(seed);
        let choice = choose_k(&points, 1..=8, seed).unwrap();
        assert_eq!(choice.k, 3, "seed {seed}: curve {:?}", choice.curve);
        assert!(choice.curve.windows(2).all(|w| w[1].1 <= w[0].1 + 1e-9));
        let run = kmeans(&points, 3, seed, 10).unwrap();
        let ari = adjusted_rand_index(&run.assignments, &labels);
        assert!(ari >= 0.9, "seed {seed}: ARI {ari}");
    }
}

#[test]
fn small_sets_reach_the_exhaustive_optimum() {
    let mut r = rng(11);
    for case in 0..40 {
        let n = r.random_range(2..=8);
        let k = r.random_range(1..=n.min(4));
        let points: Vec<Vec<f64>> = (0..n).map(|_| vec![r.random_range(-5.0..5.0), r.random_range(-5.0..5.0)]).collect();
        let run = kmeans(&points, k, case, 20).unwrap();
        let best = exhaustive_min_wcss(&points, k);
        assert!((run.wcss - best).abs() <= 1e-9, "case {case}: n={n} k={k} got {} want {best}", run.wcss);
        assert!((wcss(&points, &run.assignments, &run.centroids) - run.wcss).abs() < 1e-9);
    }
}

#[test]
fn kmeans_is_seed_deterministic() {
    let (points, _) = three_blobs(4);
    assert_eq!(kmeans(&points, 3, 5, 4).unwrap(), kmeans(&points, 3, 5, 4).unwrap());
    assert!(kmeans(&points, 0, 0, 1).is_err());
    assert!(kmeans(&points, 91, 0, 1).is_err());
}

fn record(id: &str, symbols: &[&str], emotions: &[&str]) -> PaintingRecord {
    let mut r = PaintingRecord::new(id, format!("{id}.jpg"));
    for s in symbols {
        r.annotations.insert(Tag::new(TagDimension::CulturalSymbol, s).unwrap());
    }
    for e in emotions {
        r.annotations.insert(Tag::new(TagDimension::Emotion, e).unwrap());
    }
    r
}

#[test]
fn mining_then_manual_edits() {
    let records = vec![
        record("a", &["pine", "crane and deer"], &["It expresses calm"]),
        record("b", &["lotus", "goldfish"], &["longing", "background"]),
        record("c", &["mountains", "streams"], &["calm", "vitality and hope"]),
    ];
    let gw = Gateway::for_tests();
    let emb = HashEmbedder::new(16);
    let config = MiningConfig { k_override: Some(2), ..MiningConfig::default() };
    let out = mine(&records, &ConceptNormalizationRules::default(), &gw, &emb, &config).unwrap();
    out.clusters.check_invariants().unwrap();
    let symbols: Vec<&str> = out.dimensions[0].concepts.iter().map(String::as_str).collect();
    assert_eq!(symbols, ["pine", "crane", "deer", "lotus", "goldfish", "mountains", "streams"]);
    let emotions = &out.dimensions[1].concepts;
    assert!(!emotions.iter().any(|e| e == "background" || e.starts_with("It ")));

    let label = out.clusters.cluster_of(TagDimension::CulturalSymbol, "pine").unwrap().to_string();
    let edited = adjust_clusters(
        &out.clusters,
        &[ClusterEdit::Rename { dimension: TagDimension::CulturalSymbol, from: label, to: "Plants".into() }],
    )
    .unwrap();
    assert_eq!(edited.cluster_of(TagDimension::CulturalSymbol, "pine"), Some("Plants"));
    assert_eq!(edited.edit_log.len(), 1);
}

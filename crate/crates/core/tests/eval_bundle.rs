use std::collections::BTreeMap;

use guohua_core::annotator::KnowledgeBase;
use guohua_core::client::mock::{EchoModel, PlaceholderImages};
use guohua_core::client::Gateway;
use guohua_core::corpus::TagDimension;
use guohua_core::design_space::{CategoryEntry, DesignSpaceCatalog, DimensionEntry};
use guohua_core::ideation::{
    export_bundle, import_bundle, rating_items, run_eval_batch, ChainContext, EvalConfig, GenerationMode, ImageStore,
};
use guohua_testkit::{synthetic_corpus, vocabulary};

fn catalog() -> DesignSpaceCatalog {
    let mut dims = BTreeMap::new();
    for dim in TagDimension::ALL {
        let concepts: Vec<String> = vocabulary(dim).iter().map(|s| s.to_string()).collect();
        dims.insert(
            dim,
            DimensionEntry {
                clustered: false,
                categories: vec![CategoryEntry { label: "-".into(), concept_count: concepts.len(), concepts, painting_count: None }],
            },
        );
    }
    DesignSpaceCatalog { corpus_total: 0, dimensions: dims }
}

#[test]
fn batch_exports_and_reimports() {
    let work = tempfile::tempdir().unwrap();
    let store = ImageStore::open(work.path().join("images")).unwrap();
    let (gw, text, images, kb) = (Gateway::for_tests(), EchoModel::default(), PlaceholderImages::default(), KnowledgeBase::empty());
    let ctx = ChainContext { gateway: &gw, text: &text, images: &images, store: &store, kb: &kb };
    let pool = synthetic_corpus(4, 40);
    let config = EvalConfig { set_count: 6, seed: 9, image_prompt_count: 2, ..EvalConfig::default() };

    let bundle = run_eval_batch(&catalog(), &config, ctx, &pool).unwrap();
    assert_eq!(bundle.sets.len(), 6);
    assert_eq!(bundle.sets.iter().filter(|s| s.image_prompt.is_some()).count(), 2);
    for s in &bundle.sets {
        assert!(s.error.is_none());
        assert_eq!(s.outputs.len(), 2);
        assert_eq!(s.outputs[0].mode, GenerationMode::Crafted);
        assert_eq!(s.outputs[1].mode, GenerationMode::Baseline);
        assert!(s.outputs.iter().all(|o| o.images.len() == 3));
    }
    let items = rating_items(&config.modes);
    assert_eq!(bundle.ratings.rows.len(), 6 * items.len() * 3);

    let out = work.path().join("bundle");
    export_bundle(&bundle, &out, &store).unwrap();
    let back = import_bundle(&out).unwrap();
    assert_eq!(back, bundle);

    // a second run with the same seed draws the same tag sets
    let again = run_eval_batch(&catalog(), &config, ctx, &pool).unwrap();
    let tags = |b: &guohua_core::ideation::EvalBundle| b.sets.iter().map(|s| (s.tags.clone(), s.image_prompt.clone())).collect::<Vec<_>>();
    assert_eq!(tags(&again), tags(&bundle));
}

#[test]
fn missing_images_fail_import() {
    let work = tempfile::tempdir().unwrap();
    let store = ImageStore::open(work.path().join("images")).unwrap();
    let (gw, text, images, kb) = (Gateway::for_tests(), EchoModel::default(), PlaceholderImages::default(), KnowledgeBase::empty());
    let ctx = ChainContext { gateway: &gw, text: &text, images: &images, store: &store, kb: &kb };
    let config = EvalConfig { set_count: 1, image_prompt_count: 0, ..EvalConfig::default() };
    let bundle = run_eval_batch(&catalog(), &config, ctx, &[]).unwrap();
    let out = work.path().join("bundle");
    export_bundle(&bundle, &out, &store).unwrap();
    let first = &bundle.sets[0].outputs[0].images[0];
    std::fs::remove_file(out.join("images").join(first)).unwrap();
    assert!(import_bundle(&out).is_err());
}

use std::path::PathBuf;

use guohua_core::annotator::{
    annotate_batch, annotate_painting, build_dimension_prompt, build_style_prompt, KnowledgeBase, EMPTY_KNOWLEDGE,
};
use guohua_core::client::mock::{FailingModel, ScriptedModel};
use guohua_core::client::replay::Replay;
use guohua_core::client::Gateway;
use guohua_core::corpus::{CorpusStore, PaintingRecord, PaintingType, TagDimension};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn record(id: &str, t: PaintingType) -> PaintingRecord {
    let mut r = PaintingRecord::new(id, format!("images/{id}.jpg"));
    r.painting_type = t;
    r
}

#[test]
fn two_stage_replay() {
    let replay = Replay::from_file(&fixture("annotate_two_stage.jsonl")).unwrap();
    let kb = KnowledgeBase::load(&fixture("knowledge.jsonl")).unwrap();
    let gw = Gateway::for_tests();
    let out = annotate_painting(&gw, &replay, &record("p1", PaintingType::Gongbi), &kb).unwrap();
    let a = &out.annotations;
    let concepts = |d| a.get(d).iter().map(|t| t.concept().to_string()).collect::<Vec<_>>();
    assert_eq!(concepts(TagDimension::CulturalSymbol), ["deer", "pine"]);
    assert_eq!(a.get(TagDimension::CulturalSymbol)[0].explanation.as_deref(), Some("harmony with nature"));
    // raw concepts are stored as returned; normalization happens at mining time
    assert_eq!(concepts(TagDimension::Emotion), ["It expresses tranquility", "serenity"]);
    assert_eq!(concepts(TagDimension::Style), ["blue-green landscape", "gongbi"]);
    assert_eq!(gw.log.len(), 2);
    a.check_invariants().unwrap();
}

#[test]
fn prompt_sections_and_knowledge_by_type() {
    let kb = KnowledgeBase::load(&fixture("knowledge.jsonl")).unwrap();

    let gongbi = build_dimension_prompt(&record("g", PaintingType::Gongbi), &kb).unwrap();
    let text = gongbi.render();
    let positions: Vec<usize> = gongbi.sections().iter().map(|s| text.find(s).unwrap()).collect();
    assert!(positions.windows(2).all(|w| w[0] < w[1]));
    assert!(gongbi.role_section.contains("gongbi"));
    assert!(gongbi.knowledge_section.contains("blue-green landscape"));
    assert!(gongbi.knowledge_section.contains("dry brush"));
    assert!(!gongbi.knowledge_section.contains("splashed ink"));
    for key in ["cultural_symbol", "emotion", "composition", "brushstroke", "color_tone"] {
        assert!(gongbi.format_section.contains(&format!("\"{key}\"")), "{key}");
    }
    assert!(!gongbi.format_section.contains("\"style\""));
    assert_eq!(gongbi.attached_image_ref, "images/g.jpg");

    let xieyi = build_dimension_prompt(&record("x", PaintingType::Xieyi), &kb).unwrap();
    assert!(xieyi.knowledge_section.contains("splashed ink"));
    assert!(!xieyi.knowledge_section.contains("blue-green landscape"));

    let unknown = build_dimension_prompt(&record("u", PaintingType::Unknown), &kb).unwrap();
    assert!(unknown.knowledge_section.contains("splashed ink") && unknown.knowledge_section.contains("blue-green"));

    let bare = build_dimension_prompt(&record("b", PaintingType::Gongbi), &KnowledgeBase::empty()).unwrap();
    assert_eq!(bare.knowledge_section, EMPTY_KNOWLEDGE);

    assert!(build_dimension_prompt(&PaintingRecord::new("m", " "), &kb).is_err());
    assert!(build_style_prompt(&Default::default()).is_err());
}

#[test]
fn style_failure_keeps_first_stage() {
    let kb = KnowledgeBase::empty();
    let gw = Gateway::for_tests();
    let m = ScriptedModel::sequence(vec![r#"{"cultural_symbol": ["lotus"], "emotion": ["calm"]}"#.into(), "no json here".into()]);
    let out = annotate_painting(&gw, &m, &record("p", PaintingType::Xieyi), &kb).unwrap();
    assert_eq!(out.annotations.get(TagDimension::CulturalSymbol)[0].concept(), "lotus");
    assert!(out.annotations.get(TagDimension::Style).is_empty());
    assert!(out.warnings.iter().any(|w| w.contains("style pass failed")));
}

#[test]
fn batch_commits_successes_only() {
    let store = CorpusStore::in_memory();
    for id in ["a", "b", "c"] {
        store.put(record(id, PaintingType::Gongbi)).unwrap();
    }
    let kb = KnowledgeBase::empty();
    let gw = Gateway::for_tests();
    let ok = ScriptedModel::new(|req| {
        if req.image.is_some() {
            Ok(r#"{"cultural_symbol": ["pine"], "emotion": [], "composition": [], "brushstroke": [], "color_tone": []}"#.into())
        } else {
            Ok(r#"{"style": ["meticulous"]}"#.into())
        }
    });
    let ids: Vec<String> = ["a", "c", "missing"].iter().map(|s| s.to_string()).collect();
    let rep = annotate_batch(&store, &gw, &ok, &kb, &ids, 2);
    assert_eq!(rep.annotated, ["a", "c"]);
    assert_eq!(rep.failed.len(), 1);
    let snap = store.snapshot();
    assert_eq!(snap.get("a").unwrap().annotations.get(TagDimension::Style)[0].concept(), "meticulous");
    assert!(snap.get("b").unwrap().annotations.is_empty());

    let down = FailingModel::new("down");
    let rep = annotate_batch(&store, &gw, &down, &kb, &["b".to_string()], 1);
    assert_eq!(rep.failed.len(), 1);
    assert!(store.snapshot().get("b").unwrap().annotations.is_empty());
}

use guohua_core::corpus::{parse_record_line, record_to_line, CorpusError, CorpusStore, PaintingType, TagDimension};
use guohua_testkit::synthetic_corpus;

#[test]
fn store_round_trips_through_its_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("corpus.jsonl");
    let records = synthetic_corpus(5, 300);
    let mut src = String::new();
    for r in &records {
        src.push_str(&record_to_line(r));
        src.push('\n');
    }

    let store = CorpusStore::open(&path).unwrap();
    let report = store.ingest_reader(src.as_bytes()).unwrap();
    assert!(report.errors.is_empty());
    assert_eq!(report.stats.total, 300);
    let lines = std::fs::read_to_string(&path).unwrap().lines().count();
    assert_eq!(lines, 300);

    let reopened = CorpusStore::open(&path).unwrap();
    let snap = reopened.snapshot();
    assert_eq!(snap.len(), 300);
    for r in &records {
        assert_eq!(snap.get(&r.id), Some(r));
        assert_eq!(&parse_record_line(&record_to_line(r)).unwrap(), r);
    }
    let mut out = Vec::new();
    reopened.export(&mut out).unwrap();
    assert_eq!(String::from_utf8(out).unwrap().lines().count(), 300);
}

#[test]
fn bad_lines_are_reported_and_skipped() {
    let store = CorpusStore::in_memory();
    let text = concat!(
        r#"{"id": "a", "image": "a.jpg", "type": "gongbi", "tags": {"cultural_symbol": ["pine"]}, "source": "museum"}"#, "\n",
        "not json\n",
        "\n",
        r#"{"id": "a", "image": "dup.jpg"}"#, "\n",
        r#"{"id": "b", "image": "", "type": null}"#, "\n",
        r#"{"id": "c", "image": "c.jpg", "type": "oil"}"#, "\n",
        r#"{"id": "d", "image": "d.jpg", "type": null, "tags": null}"#, "\n",
    );
    let report = store.ingest_reader(text.as_bytes()).unwrap();
    let bad: Vec<usize> = report.errors.iter().map(|e| e.line).collect();
    assert_eq!(bad, [2, 4, 5, 6]);
    let snap = store.snapshot();
    assert_eq!(snap.len(), 2);
    assert_eq!(snap.get("a").unwrap().painting_type, PaintingType::Gongbi);
    assert!(snap.get("a").unwrap().annotations.contains(TagDimension::CulturalSymbol, "pine"));
    assert_eq!(snap.get("d").unwrap().painting_type, PaintingType::Unknown);

    assert!(matches!(store.ingest_reader("junk\n".as_bytes()), Err(CorpusError::NoValidRecords { errors: 1 })));
}

#[test]
fn snapshots_are_stable_across_updates() {
    let store = CorpusStore::in_memory();
    store.ingest_reader(r#"{"id": "a", "image": "a.jpg"}"#.as_bytes()).unwrap();
    let before = store.snapshot();
    let err = store.update(|rs| {
        rs.clear();
        Err::<(), _>(CorpusError::UnknownRecord("x".into()))
    });
    assert!(err.is_err());
    assert_eq!(store.snapshot().len(), 1);
    store.update(|rs| {
        rs[0].painting_type = PaintingType::Xieyi;
        Ok(())
    })
    .unwrap();
    assert_eq!(before.get("a").unwrap().painting_type, PaintingType::Unknown);
    assert_eq!(store.snapshot().get("a").unwrap().painting_type, PaintingType::Xieyi);
}

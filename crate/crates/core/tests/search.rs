use guohua_core::corpus::{CorpusSnapshot, PaintingType, TagDimension};
use guohua_core::search::{build_index, search, IndexHandle, SearchError, SearchMode, SearchQuery};
use guohua_testkit::{rng, scan_search, scan_tag, synthetic_corpus, vocabulary};
use rand::seq::IndexedRandom;
use rand::Rng;

const EXTRA_WORDS: &[&str] = &["river", "mist", "boat", "鹿", "山水画", "flying", "nothing", "PINE", "Crane"];

fn random_query(r: &mut impl Rng) -> String {
    match r.random_range(0..4) {
        0 => {
            let dim = *TagDimension::ALL.choose(r).unwrap();
            vocabulary(dim).choose(r).unwrap().to_string()
        }
        1 => {
            let dim = *TagDimension::ALL.choose(r).unwrap();
            format!("  {}  ", vocabulary(dim).choose(r).unwrap().to_uppercase())
        }
        2 => EXTRA_WORDS.choose(r).unwrap().to_string(),
        _ => {
            let a = vocabulary(TagDimension::CulturalSymbol).choose(r).unwrap();
            let b = EXTRA_WORDS.choose(r).unwrap();
            format!("{a} {b}")
        }
    }
}

#[test]
fn index_matches_linear_scan() {
    let records = synthetic_corpus(17, 1000);
    let index = build_index(&CorpusSnapshot::from_records(records.clone()).unwrap());
    let mut r = rng(18);
    let mut nonempty = 0;
    for _ in 0..100 {
        let text = random_query(&mut r);
        let dimension = if r.random_bool(0.3) { Some(*TagDimension::ALL.choose(&mut r).unwrap()) } else { None };
        let painting_type = match r.random_range(0..4) {
            0 => Some(PaintingType::Gongbi),
            1 => Some(PaintingType::Xieyi),
            _ => None,
        };
        let limit = *[5, 20, 50, 2000].choose(&mut r).unwrap();
        let q = SearchQuery { text: text.clone(), mode: SearchMode::Local, dimension_filter: dimension, type_filter: painting_type, limit };
        let got: Vec<(String, f64)> = index.search_local(&q).unwrap().into_iter().map(|h| (h.record_id, h.score)).collect();
        let want = scan_search(&records, &text, dimension, painting_type, limit);
        assert_eq!(got, want, "query {text:?} dim {dimension:?} type {painting_type:?} limit {limit}");
        nonempty += usize::from(!want.is_empty());
    }
    assert!(nonempty > 50, "too few queries had hits: {nonempty}");
}

#[test]
fn tag_lookup_matches_membership_scan() {
    let records = synthetic_corpus(19, 1000);
    let index = build_index(&CorpusSnapshot::from_records(records.clone()).unwrap());
    for dim in TagDimension::ALL {
        for concept in vocabulary(dim) {
            assert_eq!(index.tag_lookup(dim, concept), scan_tag(&records, dim, concept), "{dim:?} {concept}");
        }
        assert!(index.tag_lookup(dim, "absent concept").is_empty());
    }
}

#[test]
fn matched_fields_name_their_source() {
    let records = synthetic_corpus(20, 200);
    let index = build_index(&CorpusSnapshot::from_records(records).unwrap());
    let hits = index.search_local(&SearchQuery::local("deer")).unwrap();
    assert!(!hits.is_empty());
    for h in &hits {
        assert!(!h.matched_fields.is_empty());
        for m in &h.matched_fields {
            assert!(["cultural_symbol", "emotion", "composition", "brushstroke", "color_tone", "style", "description"]
                .contains(&m.field.as_str()), "{}", m.field);
        }
    }
}

#[test]
fn invalid_queries_and_missing_online_backend() {
    let index = build_index(&CorpusSnapshot::from_records(synthetic_corpus(1, 10)).unwrap());
    assert!(matches!(index.search_local(&SearchQuery::local("   ")), Err(SearchError::EmptyQuery)));
    let zero = SearchQuery { limit: 0, ..SearchQuery::local("pine") };
    assert!(matches!(index.search_local(&zero), Err(SearchError::ZeroLimit)));
    let online = SearchQuery { mode: SearchMode::Online, ..SearchQuery::local("pine") };
    assert!(matches!(search(&index, &online, None), Err(SearchError::OnlineUnavailable)));
}

#[test]
fn rebuild_swaps_versions() {
    let handle = IndexHandle::new(build_index(&CorpusSnapshot::from_records(synthetic_corpus(2, 5)).unwrap()));
    let old = handle.current();
    let v = handle.rebuild(&CorpusSnapshot::from_records(synthetic_corpus(3, 50)).unwrap());
    assert!(v > old.version());
    assert_eq!(old.len(), 5);
    assert_eq!(handle.current().len(), 50);
}

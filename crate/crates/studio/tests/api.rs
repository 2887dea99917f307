use std::sync::Arc;
use std::time::Duration;

use axum::body::Body;
use axum::http::{header, Method, Request, StatusCode};
use axum::Router;
use guohua_core::client::mock::FailingModel;
use guohua_core::client::RetryPolicy;
use guohua_core::corpus::record_to_line;
use guohua_studio::demo::demo_clients;
use guohua_studio::{router, AppState, Studio};
use guohua_testkit::synthetic_corpus;
use serde_json::{json, Value};
use tower::ServiceExt;

struct Harness {
    _dir: tempfile::TempDir,
    app: Router,
    state: AppState,
}

fn write_corpus(root: &std::path::Path) {
    let mut text = String::new();
    for r in synthetic_corpus(3, 60) {
        text.push_str(&record_to_line(&r));
        text.push('\n');
    }
    std::fs::write(root.join("corpus.jsonl"), text).unwrap();
}

fn harness_with(clients: guohua_studio::Clients) -> Harness {
    let dir = tempfile::tempdir().unwrap();
    write_corpus(dir.path());
    let studio = Studio::open(dir.path(), clients, RetryPolicy::immediate()).unwrap();
    let state = AppState::start(Arc::new(studio), 2).unwrap();
    Harness { app: router(state.clone()), state, _dir: dir }
}

fn harness() -> Harness {
    harness_with(demo_clients())
}

async fn call(app: &Router, method: Method, uri: &str, token: Option<&str>, body: Option<Value>) -> (StatusCode, Value) {
    let mut req = Request::builder().method(method).uri(uri);
    if let Some(t) = token {
        req = req.header(header::AUTHORIZATION, format!("Bearer {t}"));
    }
    let req = match body {
        Some(b) => req.header(header::CONTENT_TYPE, "application/json").body(Body::from(b.to_string())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = axum::body::to_bytes(resp.into_body(), usize::MAX).await.unwrap();
    let v = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap_or(Value::Null) };
    (status, v)
}

fn assert_envelope(v: &Value, code: &str) {
    assert_eq!(v["code"], code, "{v}");
    assert!(v["message"].is_string(), "{v}");
    assert!(v.get("detail").is_some(), "{v}");
}

#[tokio::test]
async fn health_and_unknown_routes() {
    let h = harness();
    let (s, v) = call(&h.app, Method::GET, "/health", None, None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["records"], 60);
    let (s, v) = call(&h.app, Method::GET, "/nowhere", None, None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert_envelope(&v, "not_found");
}

#[tokio::test]
async fn symbol_suggestions() {
    let h = harness();
    let (s, v) = call(&h.app, Method::POST, "/symbols/suggest", None, Some(json!({"theme": "environmental protection"}))).await;
    assert_eq!(s, StatusCode::OK);
    let list = v.as_array().unwrap();
    assert_eq!(list.len(), 5);
    assert!(list.iter().any(|x| x["symbol"] == "deer"), "{v}");
    assert!(list.iter().all(|x| x["poem"]["text"].is_string() && x["explanation"].is_string()));

    let (s, v) = call(&h.app, Method::POST, "/symbols/suggest", None, Some(json!({"theme": "  "}))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_envelope(&v, "invalid_request");
    let (s, v) = call(&h.app, Method::POST, "/symbols/suggest", None, Some(json!({"count": 3}))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_envelope(&v, "invalid_body");
}

#[tokio::test]
async fn search_and_paintings() {
    let h = harness();
    let (s, v) = call(&h.app, Method::GET, "/search?q=deer&limit=5", None, None).await;
    assert_eq!(s, StatusCode::OK);
    let hits = v["hits"].as_array().unwrap();
    assert!(!hits.is_empty() && hits.len() <= 5);
    assert!(hits.iter().all(|x| x["record"]["id"] == x["record_id"]));
    let scores: Vec<f64> = hits.iter().map(|x| x["score"].as_f64().unwrap()).collect();
    assert!(scores.windows(2).all(|w| w[0] >= w[1]));

    let (s, v) = call(&h.app, Method::GET, "/search?q=deer&dimension=cultural_symbol&type=xieyi", None, None).await;
    assert_eq!(s, StatusCode::OK);
    for x in v["hits"].as_array().unwrap() {
        assert_eq!(x["record"]["painting_type"], "xieyi");
        assert!(x["matched_fields"].as_array().unwrap().iter().all(|m| m["field"] == "cultural_symbol"));
    }

    let (s, v) = call(&h.app, Method::GET, "/search?q=deer&mode=online", None, None).await;
    assert_eq!(s, StatusCode::OK);
    assert!(v["hits"][0]["external"]["image_url"].as_str().unwrap().starts_with("https://"));

    for bad in ["/search?q=%20", "/search?q=deer&type=oil", "/search?q=deer&limit=0", "/search"] {
        let (s, v) = call(&h.app, Method::GET, bad, None, None).await;
        assert_eq!(s, StatusCode::BAD_REQUEST, "{bad}");
        assert_envelope(&v, "invalid_query");
    }

    let (s, v) = call(&h.app, Method::GET, "/paintings/p0001", None, None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["id"], "p0001");
    let (s, v) = call(&h.app, Method::GET, "/paintings/zzz", None, None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert_envelope(&v, "not_found");
}

#[tokio::test]
async fn board_lifecycle_and_errors() {
    let h = harness();
    let (s, v) = call(&h.app, Method::POST, "/boards", None, None).await;
    assert_eq!(s, StatusCode::CREATED);
    let id = v["board"]["board_id"].as_str().unwrap().to_string();
    let token = v["owner_token"].as_str().unwrap().to_string();
    let t = Some(token.as_str());
    let base = format!("/boards/{id}");

    let (s, v) = call(&h.app, Method::GET, &base, None, None).await;
    assert_eq!(s, StatusCode::UNAUTHORIZED);
    assert_envelope(&v, "unauthorized");
    let (s, v) = call(&h.app, Method::GET, &base, Some("wrong"), None).await;
    assert_eq!(s, StatusCode::FORBIDDEN);
    assert_envelope(&v, "forbidden");

    // a record with a cultural symbol, so the item gets system tags
    let snap = h.state.studio.corpus.snapshot();
    let rec = snap.records().iter().find(|r| !r.annotations.get(guohua_core::TagDimension::CulturalSymbol).is_empty()).unwrap();
    let sym = rec.annotations.get(guohua_core::TagDimension::CulturalSymbol)[0].concept().to_string();

    let items = format!("{base}/items");
    let (s, v) = call(&h.app, Method::POST, &items, t, Some(json!({"version": 0, "source": {"kind": "corpus_painting", "record_id": rec.id}, "x": 10, "y": 20}))).await;
    assert_eq!(s, StatusCode::OK, "{v}");
    assert_eq!(v["version"], 1);
    assert_eq!(v["items"][0]["width"], 200.0);
    let item_id = v["items"][0]["item_id"].as_str().unwrap().to_string();

    let (s, v) = call(&h.app, Method::POST, &items, t, Some(json!({"version": 0, "source": {"kind": "online_image", "url": "https://example.org/x.jpg"}, "x": 0, "y": 0}))).await;
    assert_eq!(s, StatusCode::CONFLICT);
    assert_envelope(&v, "version_conflict");
    assert_eq!(v["detail"], json!({"given": 0, "current": 1}));

    let (s, v) = call(&h.app, Method::POST, &items, t, Some(json!({"version": 1, "source": {"kind": "corpus_painting", "record_id": "nope"}, "x": 0, "y": 0}))).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_envelope(&v, "unknown_source");
    let (s, v) = call(&h.app, Method::POST, &items, t, Some(json!({"version": 1, "source": {"kind": "generated_image", "image_ref": "0000.png"}, "x": 0, "y": 0}))).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_envelope(&v, "unknown_source");
    let (s, v) = call(&h.app, Method::POST, &items, t, Some(json!({"version": 1, "source": {"kind": "online_image", "url": "https://example.org/x.jpg"}, "x": 0, "y": 0, "width": -5}))).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_envelope(&v, "invalid_geometry");

    let tags = format!("{base}/items/{item_id}/tags");
    let (s, v) = call(&h.app, Method::POST, &tags, t, Some(json!({"version": 1, "tag": {"dimension": "cultural_symbol", "concept": sym}}))).await;
    assert_eq!(s, StatusCode::CONFLICT);
    assert_envelope(&v, "duplicate_tag");
    let (s, v) = call(&h.app, Method::POST, &tags, t, Some(json!({"version": 1, "tag": {"dimension": "emotion", "concept": "hope"}}))).await;
    assert_eq!(s, StatusCode::OK, "{v}");
    assert_eq!(v["version"], 2);
    let (s, v) = call(&h.app, Method::POST, &tags, t, Some(json!({"version": 2, "tag": {"dimension": "emotion", "concept": "hope"}}))).await;
    assert_eq!(s, StatusCode::CONFLICT);
    assert_envelope(&v, "duplicate_tag");

    let (s, v) = call(&h.app, Method::PATCH, &base, t, Some(json!({"version": 2, "ops": [
        {"op": "add_item", "source": {"kind": "online_image", "url": "https://example.org/y.jpg"}, "x": 5, "y": 5},
        {"op": "move_item", "item_id": item_id, "x": 300, "y": 40},
        {"op": "set_collected", "item_id": item_id, "collected": true}
    ]}))).await;
    assert_eq!(s, StatusCode::OK, "{v}");
    assert_eq!(v["version"], 3);
    assert_eq!(v["items"].as_array().unwrap().len(), 2);

    let enc = |s: &str| s.replace(' ', "%20");
    let (s, v) = call(&h.app, Method::GET, &format!("{base}/highlight?dimension=emotion&concept=hope"), t, None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["item_ids"], json!([item_id]));
    let (_, v) = call(&h.app, Method::GET, &format!("{base}/highlight?dimension=cultural_symbol&concept={}", enc(&sym)), t, None).await;
    assert_eq!(v["item_ids"], json!([item_id]));

    let (s, v) = call(&h.app, Method::GET, "/boards/unknown", t, None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert_envelope(&v, "not_found");

    // reload reconstructs the board from disk
    let reopened = guohua_studio::boards::BoardStore::open(h.state.studio.data.boards()).unwrap();
    let b = reopened.get(&id, &token).unwrap();
    assert_eq!(b.version, 3);
    assert!(b.item(&item_id).unwrap().collected);
}

#[tokio::test]
async fn generation_job_end_to_end() {
    let h = harness();
    let req = json!({"tags": [
        {"dimension": "cultural_symbol", "concept": "Nine-Colored Deer"},
        {"dimension": "style", "concept": "blue-green landscape"}
    ], "image_prompt": "p0002"});
    let (s, v) = call(&h.app, Method::POST, "/generate", None, Some(req)).await;
    assert_eq!(s, StatusCode::ACCEPTED, "{v}");
    assert_eq!(v["status"], "queued");
    let job_id = v["job_id"].as_str().unwrap().to_string();

    let job = h.state.jobs.wait(&job_id, Duration::from_secs(20)).await.unwrap();
    assert_eq!(job.status, guohua_studio::jobs::JobStatus::Done, "{:?}", job.error);
    let (s, v) = call(&h.app, Method::GET, &format!("/jobs/{job_id}"), None, None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["status"], "done");
    let images = v["result"]["images"].as_array().unwrap();
    assert_eq!(images.len(), 3);
    assert!(v["result"]["poem"]["text"].as_str().is_some_and(|p| !p.is_empty()));
    let intention = v["result"]["design_intention"].as_str().unwrap();
    assert!(intention.contains("Nine-Colored Deer") && intention.contains("blue-green landscape"));

    let img_uri = format!("/images/{}", images[0].as_str().unwrap());
    let resp = h.app.clone().oneshot(Request::get(img_uri).body(Body::empty()).unwrap()).await.unwrap();
    assert_eq!(resp.status(), StatusCode::OK);
    assert!(resp.headers()[header::CONTENT_TYPE].to_str().unwrap().starts_with("image/"));

    let (s, v) = call(&h.app, Method::POST, "/generate", None, Some(json!({"tags": [], "free_text": ""}))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_envelope(&v, "invalid_request");
    let (s, v) = call(&h.app, Method::POST, "/generate", None, Some(json!({"free_text": "river", "image_prompt": "missing"}))).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_envelope(&v, "unknown_image_prompt");
    let (s, v) = call(&h.app, Method::GET, "/jobs/none", None, None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert_envelope(&v, "not_found");
}

#[tokio::test]
async fn failing_image_endpoint_fails_the_job() {
    let mut clients = demo_clients();
    clients.images = Arc::new(FailingModel::new("image endpoint unreachable"));
    let h = harness_with(clients);
    let (s, v) = call(&h.app, Method::POST, "/generate", None, Some(json!({"free_text": "misty river"}))).await;
    assert_eq!(s, StatusCode::ACCEPTED);
    let job = h.state.jobs.wait(v["job_id"].as_str().unwrap(), Duration::from_secs(20)).await.unwrap();
    assert_eq!(job.status, guohua_studio::jobs::JobStatus::Failed);
    assert!(job.error.as_deref().unwrap().contains("image endpoint unreachable"), "{:?}", job.error);
}

#[tokio::test]
async fn image_upload_and_catalog() {
    let h = harness();
    let png = b"\x89PNG\r\n\x1a\nfake".to_vec();
    let req = Request::post("/images").header(header::CONTENT_TYPE, "image/png").body(Body::from(png.clone())).unwrap();
    let resp = h.app.clone().oneshot(req).await.unwrap();
    assert_eq!(resp.status(), StatusCode::CREATED);
    let v: Value = serde_json::from_slice(&axum::body::to_bytes(resp.into_body(), usize::MAX).await.unwrap()).unwrap();
    let r = v["image_ref"].as_str().unwrap().to_string();
    let resp = h.app.clone().oneshot(Request::get(format!("/images/{r}")).body(Body::empty()).unwrap()).await.unwrap();
    assert_eq!(resp.status(), StatusCode::OK);
    assert_eq!(axum::body::to_bytes(resp.into_body(), usize::MAX).await.unwrap().to_vec(), png);

    // an uploaded image can be a board item and an image prompt
    let (_, b) = call(&h.app, Method::POST, "/boards", None, None).await;
    let uri = format!("/boards/{}/items", b["board"]["board_id"].as_str().unwrap());
    let (s, _) = call(&h.app, Method::POST, &uri, b["owner_token"].as_str(), Some(json!({"version": 0, "source": {"kind": "generated_image", "image_ref": r}, "x": 0, "y": 0}))).await;
    assert_eq!(s, StatusCode::OK);
    let (s, _) = call(&h.app, Method::POST, "/generate", None, Some(json!({"free_text": "river", "image_prompt": r}))).await;
    assert_eq!(s, StatusCode::ACCEPTED);

    let req = Request::post("/images").header(header::CONTENT_TYPE, "text/plain").body(Body::from("hi")).unwrap();
    let resp = h.app.clone().oneshot(req).await.unwrap();
    assert_eq!(resp.status(), StatusCode::UNSUPPORTED_MEDIA_TYPE);

    let (s, v) = call(&h.app, Method::GET, "/catalog", None, None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert_envelope(&v, "not_found");
    let summary = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/config/design_space_summary.json");
    std::fs::copy(summary, h.state.studio.data.catalog()).unwrap();
    h.state.studio.reload_catalog().unwrap();
    let (s, v) = call(&h.app, Method::GET, "/catalog", None, None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["dimensions"]["emotion"]["categories"][3]["concept_count"], 1387);
}

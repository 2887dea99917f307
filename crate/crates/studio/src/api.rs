//! HTTP routes. Every error body is `{code, message, detail}`.

use std::sync::Arc;

use axum::extract::{FromRequest, FromRequestParts, Path, Query, Request, State};
use axum::http::header::{AUTHORIZATION, CONTENT_TYPE, LOCATION};
use axum::http::request::Parts;
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use guohua_core::corpus::{PaintingRecord, PaintingType, Tag, TagDimension};
use guohua_core::ideation::{suggest_symbols, GenerationRequest, IdeationError, SymbolSuggestion};
use guohua_core::search::{search, OnlineBackend, SearchError, SearchHit, SearchMode, SearchQuery, DEFAULT_LIMIT};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::app::{ChainExecutor, Studio};
use crate::boards::{BoardError, BoardOp, ItemSource, Moodboard, DEFAULT_ITEM_SIZE};
use crate::jobs::{JobError, JobQueue};

pub const DEFAULT_SUGGESTIONS: usize = 5;
pub const MAX_UPLOAD_BYTES: usize = 20 * 1024 * 1024;

#[derive(Clone)]
pub struct AppState {
    pub studio: Arc<Studio>,
    pub jobs: JobQueue,
}

impl AppState {
    /// Starts the job queue on `jobs.jsonl` in the data directory. Must be
    /// called inside a tokio runtime.
    pub fn start(studio: Arc<Studio>, workers: usize) -> Result<AppState, JobError> {
        let jobs = JobQueue::start(Some(studio.data.jobs()), workers, Arc::new(ChainExecutor(studio.clone())))?;
        Ok(AppState { studio, jobs })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    #[serde(default)]
    pub detail: Value,
}

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> ApiError {
        ApiError { status, body: ErrorBody { code: code.into(), message: message.into(), detail: Value::Null } }
    }

    pub fn with_detail(mut self, detail: Value) -> ApiError {
        self.body.detail = detail;
        self
    }

    fn not_found(what: &str, id: &str) -> ApiError {
        ApiError::new(StatusCode::NOT_FOUND, "not_found", format!("unknown {what} `{id}`"))
    }

    fn internal(e: impl std::fmt::Display) -> ApiError {
        tracing::error!(error = %e, "internal error");
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

impl From<BoardError> for ApiError {
    fn from(e: BoardError) -> ApiError {
        let msg = e.to_string();
        match e {
            BoardError::UnknownBoard(_) | BoardError::UnknownItem(_) => ApiError::new(StatusCode::NOT_FOUND, "not_found", msg),
            BoardError::Unauthorized => ApiError::new(StatusCode::FORBIDDEN, "forbidden", msg),
            BoardError::VersionConflict { given, current } => ApiError::new(StatusCode::CONFLICT, "version_conflict", msg)
                .with_detail(json!({"given": given, "current": current})),
            BoardError::DuplicatesSystemTag(_) | BoardError::DuplicateTag(_) => {
                ApiError::new(StatusCode::CONFLICT, "duplicate_tag", msg)
            }
            BoardError::Geometry(_) => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_geometry", msg),
            BoardError::UnknownRecord(_) => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "unknown_source", msg),
            BoardError::Io(_) => ApiError::internal(msg),
        }
    }
}

impl From<SearchError> for ApiError {
    fn from(e: SearchError) -> ApiError {
        let msg = e.to_string();
        match e {
            SearchError::EmptyQuery | SearchError::ZeroLimit => ApiError::new(StatusCode::BAD_REQUEST, "invalid_query", msg),
            SearchError::OnlineUnavailable => ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "online_unavailable", msg),
            SearchError::Client(_) => ApiError::new(StatusCode::BAD_GATEWAY, "upstream", msg),
        }
    }
}

impl From<IdeationError> for ApiError {
    fn from(e: IdeationError) -> ApiError {
        let msg = e.to_string();
        match e {
            IdeationError::EmptyTheme
            | IdeationError::ZeroCount
            | IdeationError::EmptyRequest
            | IdeationError::InvalidRequest(_)
            | IdeationError::DuplicateTag(_) => ApiError::new(StatusCode::BAD_REQUEST, "invalid_request", msg),
            IdeationError::Client(_) | IdeationError::Parse { .. } | IdeationError::EmptyIntention => {
                ApiError::new(StatusCode::BAD_GATEWAY, "upstream", msg)
            }
            _ => ApiError::internal(msg),
        }
    }
}

impl From<JobError> for ApiError {
    fn from(e: JobError) -> ApiError {
        match e {
            JobError::Invalid(m) => ApiError::new(StatusCode::BAD_REQUEST, "invalid_request", m),
            other => ApiError::internal(other),
        }
    }
}

/// JSON body whose rejection uses the error envelope.
pub struct Body<T>(pub T);

impl<S: Send + Sync, T: DeserializeOwned> FromRequest<S> for Body<T> {
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, ApiError> {
        Json::<T>::from_request(req, state)
            .await
            .map(|Json(v)| Body(v))
            .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "invalid_body", e.body_text()))
    }
}

/// Query string whose rejection uses the error envelope.
pub struct Params<T>(pub T);

impl<S: Send + Sync, T: DeserializeOwned> FromRequestParts<S> for Params<T> {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, state: &S) -> Result<Self, ApiError> {
        Query::<T>::from_request_parts(parts, state)
            .await
            .map(|Query(v)| Params(v))
            .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "invalid_query", e.body_text()))
    }
}

/// `Authorization: Bearer <owner token>`.
pub struct Bearer(pub String);

impl<S: Send + Sync> FromRequestParts<S> for Bearer {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, _: &S) -> Result<Self, ApiError> {
        parts
            .headers
            .get(AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "))
            .map(|t| Bearer(t.trim().to_string()))
            .filter(|b| !b.0.is_empty())
            .ok_or_else(|| ApiError::new(StatusCode::UNAUTHORIZED, "unauthorized", "missing bearer token"))
    }
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> T + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f).await.map_err(ApiError::internal)
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/symbols/suggest", post(suggest))
        .route("/search", get(search_handler))
        .route("/paintings/{id}", get(painting))
        .route("/paintings/{id}/image", get(painting_image))
        .route("/images", post(upload_image).layer(axum::extract::DefaultBodyLimit::max(MAX_UPLOAD_BYTES)))
        .route("/images/{image_ref}", get(image))
        .route("/boards", post(create_board))
        .route("/boards/{id}", get(get_board).patch(patch_board))
        .route("/boards/{id}/items", post(add_item))
        .route("/boards/{id}/items/{item_id}/tags", post(add_tag))
        .route("/boards/{id}/highlight", get(highlight))
        .route("/generate", post(generate))
        .route("/jobs/{id}", get(job))
        .route("/catalog", get(catalog))
        .fallback(|| async { ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such route") })
        .with_state(state)
}

async fn health(State(s): State<AppState>) -> Json<Value> {
    Json(json!({
        "status": "ok",
        "records": s.studio.corpus.snapshot().len(),
        "index_version": s.studio.index.current().version(),
        "workers": s.jobs.workers(),
    }))
}

#[derive(Debug, Deserialize)]
pub struct SuggestBody {
    pub theme: String,
    #[serde(default = "default_suggestions")]
    pub count: usize,
}

fn default_suggestions() -> usize {
    DEFAULT_SUGGESTIONS
}

async fn suggest(State(s): State<AppState>, Body(b): Body<SuggestBody>) -> Result<Json<Vec<SymbolSuggestion>>, ApiError> {
    let studio = s.studio.clone();
    let out = blocking(move || suggest_symbols(&studio.gateway, studio.clients.text.as_ref(), &b.theme, b.count)).await??;
    Ok(Json(out))
}

#[derive(Debug, Deserialize)]
pub struct SearchParams {
    pub q: String,
    #[serde(default)]
    pub mode: Option<SearchMode>,
    #[serde(default)]
    pub dimension: Option<TagDimension>,
    #[serde(default, rename = "type")]
    pub painting_type: Option<String>,
    #[serde(default)]
    pub limit: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SearchResultItem {
    #[serde(flatten)]
    pub hit: SearchHit,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record: Option<PaintingRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SearchResponse {
    pub index_version: u64,
    pub hits: Vec<SearchResultItem>,
}

async fn search_handler(State(s): State<AppState>, Params(p): Params<SearchParams>) -> Result<Json<SearchResponse>, ApiError> {
    let type_filter = p
        .painting_type
        .as_deref()
        .map(str::parse::<PaintingType>)
        .transpose()
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "invalid_query", e.to_string()))?;
    let query = SearchQuery {
        text: p.q,
        mode: p.mode.unwrap_or_default(),
        dimension_filter: p.dimension,
        type_filter,
        limit: p.limit.unwrap_or(DEFAULT_LIMIT),
    };
    let studio = s.studio.clone();
    let out = blocking(move || {
        let index = studio.index.current();
        let online = studio.clients.online.as_ref().map(|o| OnlineBackend { gateway: &studio.gateway, source: o.as_ref() });
        let hits = search(&index, &query, online.as_ref())?;
        let snap = studio.corpus.snapshot();
        let hits = hits
            .into_iter()
            .map(|hit| {
                let record = hit.external.is_none().then(|| snap.get(&hit.record_id).cloned()).flatten();
                SearchResultItem { hit, record }
            })
            .collect();
        Ok::<_, SearchError>(SearchResponse { index_version: index.version(), hits })
    })
    .await??;
    Ok(Json(out))
}

async fn painting(State(s): State<AppState>, Path(id): Path<String>) -> Result<Json<PaintingRecord>, ApiError> {
    s.studio.corpus.snapshot().get(&id).cloned().map(Json).ok_or_else(|| ApiError::not_found("painting", &id))
}

async fn painting_image(State(s): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let rec = s.studio.corpus.snapshot().get(&id).cloned().ok_or_else(|| ApiError::not_found("painting", &id))?;
    let target = s.studio.data.resolve_image(&rec.image_ref);
    if target.contains("://") {
        return Ok((StatusCode::FOUND, [(LOCATION, target)]).into_response());
    }
    let path = std::path::PathBuf::from(&target);
    let bytes = tokio::fs::read(&path).await.map_err(|_| ApiError::not_found("image file", &rec.image_ref))?;
    let mime = guohua_core::client::http::mime_for(&path);
    Ok(([(CONTENT_TYPE, mime)], bytes).into_response())
}

async fn image(State(s): State<AppState>, Path(image_ref): Path<String>) -> Result<Response, ApiError> {
    let studio = s.studio.clone();
    let r = image_ref.clone();
    match blocking(move || studio.images.get(&r)).await?.map_err(ApiError::internal)? {
        Some((mime, bytes)) => Ok(([(CONTENT_TYPE, mime)], bytes).into_response()),
        None => Err(ApiError::not_found("image", &image_ref)),
    }
}

async fn upload_image(State(s): State<AppState>, headers: HeaderMap, bytes: axum::body::Bytes) -> Result<Response, ApiError> {
    let mime = headers.get(CONTENT_TYPE).and_then(|v| v.to_str().ok()).unwrap_or("").to_string();
    if !mime.starts_with("image/") {
        return Err(ApiError::new(StatusCode::UNSUPPORTED_MEDIA_TYPE, "unsupported_media_type", "body must be an image"));
    }
    if bytes.is_empty() {
        return Err(ApiError::new(StatusCode::BAD_REQUEST, "invalid_body", "empty image"));
    }
    let studio = s.studio.clone();
    let r = blocking(move || studio.images.put(&mime, &bytes)).await?.map_err(ApiError::internal)?;
    Ok((StatusCode::CREATED, Json(json!({"image_ref": r}))).into_response())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CreatedBoard {
    pub board: Moodboard,
    pub owner_token: String,
}

async fn create_board(State(s): State<AppState>) -> Result<(StatusCode, Json<CreatedBoard>), ApiError> {
    let (board, owner_token) = s.studio.boards.create()?;
    Ok((StatusCode::CREATED, Json(CreatedBoard { board, owner_token })))
}

async fn get_board(State(s): State<AppState>, Path(id): Path<String>, Bearer(token): Bearer) -> Result<Json<Moodboard>, ApiError> {
    Ok(Json(s.studio.boards.get(&id, &token)?))
}

fn mutate(s: &AppState, id: &str, token: &str, version: u64, ops: &[BoardOp]) -> Result<Json<Moodboard>, ApiError> {
    let studio = &s.studio;
    Ok(Json(studio.boards.mutate(id, token, version, ops, &|src| studio.system_tags(src))?))
}

#[derive(Debug, Deserialize)]
pub struct PatchBody {
    pub version: u64,
    pub ops: Vec<BoardOp>,
}

async fn patch_board(
    State(s): State<AppState>,
    Path(id): Path<String>,
    Bearer(token): Bearer,
    Body(b): Body<PatchBody>,
) -> Result<Json<Moodboard>, ApiError> {
    mutate(&s, &id, &token, b.version, &b.ops)
}

fn default_size() -> f64 {
    DEFAULT_ITEM_SIZE
}

#[derive(Debug, Deserialize)]
pub struct AddItemBody {
    pub version: u64,
    pub source: ItemSource,
    pub x: f64,
    pub y: f64,
    #[serde(default = "default_size")]
    pub width: f64,
    #[serde(default = "default_size")]
    pub height: f64,
}

async fn add_item(
    State(s): State<AppState>,
    Path(id): Path<String>,
    Bearer(token): Bearer,
    Body(b): Body<AddItemBody>,
) -> Result<Json<Moodboard>, ApiError> {
    let op = BoardOp::AddItem { source: b.source, x: b.x, y: b.y, width: b.width, height: b.height };
    mutate(&s, &id, &token, b.version, &[op])
}

#[derive(Debug, Deserialize)]
pub struct AddTagBody {
    pub version: u64,
    pub tag: Tag,
}

async fn add_tag(
    State(s): State<AppState>,
    Path((id, item_id)): Path<(String, String)>,
    Bearer(token): Bearer,
    Body(b): Body<AddTagBody>,
) -> Result<Json<Moodboard>, ApiError> {
    mutate(&s, &id, &token, b.version, &[BoardOp::AddCustomTag { item_id, tag: b.tag }])
}

#[derive(Debug, Deserialize)]
pub struct HighlightParams {
    pub dimension: TagDimension,
    pub concept: String,
}

async fn highlight(
    State(s): State<AppState>,
    Path(id): Path<String>,
    Bearer(token): Bearer,
    Params(p): Params<HighlightParams>,
) -> Result<Json<Value>, ApiError> {
    let board = s.studio.boards.get(&id, &token)?;
    Ok(Json(json!({"item_ids": board.highlight_by_tag(p.dimension, &p.concept)})))
}

async fn generate(State(s): State<AppState>, Body(request): Body<GenerationRequest>) -> Result<(StatusCode, Json<Value>), ApiError> {
    if let Some(p) = &request.image_prompt {
        s.studio
            .resolve_image_prompt(p)
            .map_err(|m| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "unknown_image_prompt", m))?;
    }
    let job_id = s.jobs.submit(request)?;
    Ok((StatusCode::ACCEPTED, Json(json!({"job_id": job_id, "status": "queued"}))))
}

async fn job(State(s): State<AppState>, Path(id): Path<String>) -> Result<Json<crate::jobs::GenerationJob>, ApiError> {
    s.jobs.get(&id).map(Json).ok_or_else(|| ApiError::not_found("job", &id))
}

async fn catalog(State(s): State<AppState>) -> Result<Json<guohua_core::design_space::DesignSpaceCatalog>, ApiError> {
    s.studio
        .catalog
        .read()
        .expect("catalog lock")
        .clone()
        .map(Json)
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "not_found", "no catalog has been mined yet"))
}

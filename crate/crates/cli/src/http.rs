//! HTTP API over the engine. Sessions live in memory and expire after the
//! configured TTL; the catalog is shared and persisted to the store.

use std::collections::{BTreeSet, HashMap};
use std::path::PathBuf;
use std::sync::{Arc, Mutex, RwLock};

use axum::extract::{Path, State};
use axum::http::{StatusCode, header};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{Value, json};
use xcube_core::cube::{AugmentOptions, Catalog, CatalogEntry, EntryKind, MatchReport};
use xcube_core::path::ContextPath;
use xcube_core::session::{Engine, Overrides, Session};

#[derive(Debug, thiserror::Error)]
pub enum ApiError {
    #[error("session `{0}` not found")]
    UnknownSession(String),
    #[error("no table `{0}` in this session")]
    UnknownTable(String),
    #[error(transparent)]
    Engine(#[from] xcube_core::Error),
    #[error("worker failed: {0}")]
    Worker(String),
}

impl ApiError {
    fn status(&self) -> StatusCode {
        use xcube_core::Error as E;
        match self {
            ApiError::UnknownSession(_) | ApiError::UnknownTable(_) => StatusCode::NOT_FOUND,
            ApiError::Worker(_) => StatusCode::INTERNAL_SERVER_ERROR,
            ApiError::Engine(e) => match e {
                E::State(_) => StatusCode::CONFLICT,
                E::InvalidQuery { .. } | E::InvalidArgument(_) | E::InvalidPath(_) | E::InvalidSelection { .. } => {
                    StatusCode::BAD_REQUEST
                }
                E::UnknownConnection(_)
                | E::UncoveredPair(..)
                | E::Planning(_)
                | E::Catalog(_)
                | E::DuplicateKey { .. }
                | E::UnresolvableKey { .. }
                | E::RowErrors(_) => StatusCode::UNPROCESSABLE_ENTITY,
                E::NodeNotFound(_) => StatusCode::NOT_FOUND,
                _ => StatusCode::INTERNAL_SERVER_ERROR,
            },
        }
    }

    fn kind(&self) -> &'static str {
        use xcube_core::Error as E;
        match self {
            ApiError::UnknownSession(_) => "unknown_session",
            ApiError::UnknownTable(_) => "unknown_table",
            ApiError::Worker(_) => "internal",
            ApiError::Engine(e) => match e {
                E::State(_) => "state",
                E::InvalidQuery { .. } => "invalid_query",
                E::InvalidArgument(_) | E::InvalidPath(_) | E::InvalidSelection { .. } => "invalid_argument",
                E::UnknownConnection(_) => "unknown_connection",
                E::UncoveredPair(..) => "uncovered_pair",
                E::Planning(_) => "planning",
                E::Catalog(_) => "catalog",
                E::DuplicateKey { .. } => "duplicate_key",
                E::UnresolvableKey { .. } => "unresolvable_key",
                E::RowErrors(_) => "row_errors",
                E::NodeNotFound(_) => "node_not_found",
                _ => "internal",
            },
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({"error": self.kind(), "message": self.to_string()});
        (self.status(), Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

pub struct AppState {
    engine: Engine,
    store: PathBuf,
    catalog: RwLock<Catalog>,
    sessions: Mutex<HashMap<String, Arc<Mutex<Session>>>>,
}

pub type Shared = Arc<AppState>;

impl AppState {
    pub fn new(engine: Engine, store: PathBuf) -> xcube_core::Result<Shared> {
        let catalog = Catalog::load(&store)?;
        Ok(Arc::new(AppState {
            engine,
            store,
            catalog: RwLock::new(catalog),
            sessions: Mutex::new(HashMap::new()),
        }))
    }

    fn session(&self, id: &str) -> ApiResult<Arc<Mutex<Session>>> {
        let mut map = self.sessions.lock().expect("session map poisoned");
        let s = map.get(id).cloned().ok_or_else(|| ApiError::UnknownSession(id.to_string()))?;
        let expired = s.lock().expect("session poisoned").is_expired();
        if expired {
            map.remove(id);
            return Err(ApiError::UnknownSession(id.to_string()));
        }
        Ok(s)
    }

    fn sweep(&self) {
        let mut map = self.sessions.lock().expect("session map poisoned");
        map.retain(|_, s| s.try_lock().map(|s| !s.is_expired()).unwrap_or(true));
    }

    pub fn session_count(&self) -> usize {
        self.sessions.lock().expect("session map poisoned").len()
    }

    fn catalog(&self) -> Catalog {
        self.catalog.read().expect("catalog poisoned").clone()
    }
}

/// Run `f` on the session under its lock, off the async workers.
async fn with_session<T, F>(state: &Shared, id: &str, f: F) -> ApiResult<T>
where
    T: Send + 'static,
    F: FnOnce(&AppState, &mut Session) -> ApiResult<T> + Send + 'static,
{
    let s = state.session(id)?;
    let state = state.clone();
    tokio::task::spawn_blocking(move || {
        let mut guard = s.lock().expect("session poisoned");
        let out = f(&state, &mut guard);
        guard.touch(state.engine.config.ttl_secs);
        out
    })
    .await
    .map_err(|e| ApiError::Worker(e.to_string()))?
}

pub fn router(state: Shared) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session).delete(delete_session))
        .route("/sessions/{id}/contexts", post(post_contexts))
        .route("/sessions/{id}/connections", post(post_connections))
        .route("/sessions/{id}/materialize", post(post_materialize))
        .route("/sessions/{id}/result.csv", get(get_result_csv))
        .route("/sessions/{id}/match", get(get_match))
        .route("/sessions/{id}/catalog", post(post_catalog))
        .route("/sessions/{id}/cube", post(post_cube))
        .route("/sessions/{id}/tables/{file}", get(get_table))
        .route("/catalog", get(get_catalog))
        .route("/guides/stats", get(get_guide_stats))
        .with_state(state)
}

pub async fn serve(state: Shared, addr: &str) -> anyhow::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

fn session_view(s: &Session) -> Value {
    json!({
        "id": s.id,
        "query": s.query.to_string(),
        "stage": s.stage,
        "k": s.k,
        "radius_cap": s.radius_cap,
        "topk": s.topk,
        "buckets": s.buckets,
        "connections": s.summary,
        "selected_contexts": s.query.refinement.selected_contexts,
        "expires": s.expires,
    })
}

#[derive(Deserialize)]
struct CreateSession {
    query: String,
    k: Option<usize>,
    radius_cap: Option<u32>,
}

async fn create_session(State(state): State<Shared>, Json(req): Json<CreateSession>) -> ApiResult<(StatusCode, Json<Value>)> {
    state.sweep();
    let st = state.clone();
    let session = tokio::task::spawn_blocking(move || {
        let id = uuid::Uuid::new_v4().simple().to_string();
        let over = Overrides {
            k: req.k,
            radius_cap: req.radius_cap,
        };
        Session::start(&st.engine, id, &req.query, over)
    })
    .await
    .map_err(|e| ApiError::Worker(e.to_string()))??;
    let body = session_view(&session);
    state
        .sessions
        .lock()
        .expect("session map poisoned")
        .insert(session.id.clone(), Arc::new(Mutex::new(session)));
    Ok((StatusCode::CREATED, Json(body)))
}

async fn get_session(State(state): State<Shared>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    with_session(&state, &id, |_, s| Ok(Json(session_view(s)))).await
}

async fn delete_session(State(state): State<Shared>, Path(id): Path<String>) -> ApiResult<StatusCode> {
    state.session(&id)?;
    state.sessions.lock().expect("session map poisoned").remove(&id);
    Ok(StatusCode::NO_CONTENT)
}

#[derive(Deserialize)]
struct ContextsRequest {
    /// One entry per term; `null` leaves the term unrestricted.
    selections: Vec<Option<BTreeSet<ContextPath>>>,
}

async fn post_contexts(
    State(state): State<Shared>,
    Path(id): Path<String>,
    Json(req): Json<ContextsRequest>,
) -> ApiResult<Json<Value>> {
    with_session(&state, &id, move |st, s| {
        s.select_contexts(&st.engine, &req.selections)?;
        Ok(Json(session_view(s)))
    })
    .await
}

#[derive(Deserialize)]
struct ConnectionsRequest {
    chosen: Vec<String>,
}

async fn post_connections(
    State(state): State<Shared>,
    Path(id): Path<String>,
    Json(req): Json<ConnectionsRequest>,
) -> ApiResult<Json<Value>> {
    with_session(&state, &id, move |_, s| {
        s.choose_connections(&req.chosen)?;
        Ok(Json(json!({"chosen": req.chosen, "stage": s.stage})))
    })
    .await
}

async fn post_materialize(State(state): State<Shared>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let href = format!("/sessions/{id}/result.csv");
    with_session(&state, &id, move |st, s| {
        let r = s.materialize(&st.engine)?;
        Ok(Json(json!({
            "rows": r.len(),
            "schema": r.schema,
            "warnings": r.warnings,
            "result": href,
        })))
    })
    .await
}

fn csv_response(bytes: Vec<u8>) -> Response {
    ([(header::CONTENT_TYPE, "text/csv; charset=utf-8")], bytes).into_response()
}

async fn get_result_csv(State(state): State<Shared>, Path(id): Path<String>) -> ApiResult<Response> {
    with_session(&state, &id, |_, s| {
        let mut buf = Vec::new();
        s.result()?.write_csv(&mut buf)?;
        Ok(csv_response(buf))
    })
    .await
}

async fn get_match(State(state): State<Shared>, Path(id): Path<String>) -> ApiResult<Json<MatchReport>> {
    with_session(&state, &id, |st, s| {
        let cat = st.catalog();
        Ok(Json(s.match_catalog(&cat)?.clone()))
    })
    .await
}

#[derive(Deserialize)]
struct Definition {
    kind: EntryKind,
    /// Result column, 1-based.
    column: usize,
    #[serde(flatten)]
    entry: CatalogEntry,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum CatalogRequest {
    Many { definitions: Vec<Definition> },
    One(Definition),
}

async fn post_catalog(
    State(state): State<Shared>,
    Path(id): Path<String>,
    Json(req): Json<CatalogRequest>,
) -> ApiResult<Json<MatchReport>> {
    let defs = match req {
        CatalogRequest::Many { definitions } => definitions,
        CatalogRequest::One(d) => vec![d],
    };
    with_session(&state, &id, move |st, s| {
        // All definitions apply or none do.
        let mut cat = st.catalog.write().expect("catalog poisoned");
        let mut draft = cat.clone();
        for d in defs {
            if d.column == 0 {
                return Err(xcube_core::Error::InvalidArgument("columns are numbered from 1".into()).into());
            }
            s.define(&st.engine, &mut draft, d.kind, d.entry, d.column - 1)?;
        }
        draft.save(&st.store)?;
        *cat = draft;
        Ok(Json(s.match_catalog(&cat)?.clone()))
    })
    .await
}

#[derive(Deserialize, Default)]
struct CubeRequest {
    facts: Option<BTreeSet<String>>,
    dimensions: Option<BTreeSet<String>>,
    #[serde(default)]
    skip_rows: bool,
}

#[derive(Serialize)]
struct TableLink {
    kind: &'static str,
    name: String,
    rows: usize,
    href: String,
}

async fn post_cube(
    State(state): State<Shared>,
    Path(id): Path<String>,
    body: Option<Json<CubeRequest>>,
) -> ApiResult<Json<Value>> {
    let req = body.map(|Json(b)| b).unwrap_or_default();
    let prefix = format!("/sessions/{id}/tables");
    with_session(&state, &id, move |st, s| {
        let cat = st.catalog();
        let opts = AugmentOptions { skip_rows: req.skip_rows };
        let star = s.build_cube(&st.engine, &cat, req.facts, req.dimensions, &opts)?;
        let link = |kind: &'static str, t: &xcube_core::cube::Table| TableLink {
            kind,
            name: t.name.clone(),
            rows: t.rows.len(),
            href: format!("{prefix}/{}", t.file),
        };
        let tables: Vec<TableLink> = star
            .facts
            .iter()
            .map(|t| link("fact", t))
            .chain(star.dimensions.iter().map(|t| link("dimension", t)))
            .collect();
        let skipped = s.augmented.as_ref().map(|a| a.skipped_rows.clone()).unwrap_or_default();
        Ok(Json(json!({
            "manifest": s.star.as_ref().map(|x| &x.manifest),
            "tables": tables,
            "skipped_rows": skipped,
        })))
    })
    .await
}

async fn get_table(State(state): State<Shared>, Path((id, file)): Path<(String, String)>) -> ApiResult<Response> {
    with_session(&state, &id, move |_, s| {
        let star = s
            .star
            .as_ref()
            .ok_or_else(|| xcube_core::Error::State("no cube has been built; post to /cube first".into()))?;
        let t = star
            .facts
            .iter()
            .chain(&star.dimensions)
            .find(|t| t.file == file)
            .ok_or(ApiError::UnknownTable(file))?;
        let mut buf = Vec::new();
        t.write_csv(&mut buf)?;
        Ok(csv_response(buf))
    })
    .await
}

async fn get_catalog(State(state): State<Shared>) -> Json<Catalog> {
    Json(state.catalog())
}

async fn get_guide_stats(State(state): State<Shared>) -> Json<Value> {
    Json(serde_json::to_value(state.engine.guides.stats()).unwrap_or(Value::Null))
}

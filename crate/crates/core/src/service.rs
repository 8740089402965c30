//! HTTP service: stored designs, editing sessions with undo/redo, graph
//! extraction, instruction translation and background evaluation jobs.
//!
//! Everything persists under one store directory, one JSON file per record,
//! written with write-then-rename:
//!
//! ```text
//! <store>/designs/<content hash>.json
//! <store>/sessions/<uuid>.json
//! <store>/reports/<job uuid>.json
//! ```

use std::collections::HashMap;
use std::fs;
use std::io::Write as _;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

use axum::extract::{Path as UrlPath, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::backend::{
    edit_via_backend, evaluate_edits, translate_instruction, BackendKind, ChatClient, Diagnostics, EditorBackend,
    EvalInput,
};
use crate::datagen::{donor_pool, read_designs};
use crate::design::{emit_design, parse_design, Design, DesignError, Element};
use crate::graph::{build_relation_graph, serialize_graph, RelationGraph, DEFAULT_ALPHA};
use crate::metrics::{EvalReport, DEFAULT_OP_TOLERANCE};
use crate::ops::{prepare_edit, synthesize, EditOperation, Setting};
use crate::solver::SolverConfig;
use crate::{derive_seed, seeded_rng};

// Errors

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
    pub path: Option<String>,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code,
            message: message.into(),
            path: None,
        }
    }

    fn at(mut self, path: impl Into<String>) -> Self {
        let p = path.into();
        self.path = (!p.is_empty() && p != ".").then_some(p);
        self
    }

    fn not_found(what: &str, id: &str) -> Self {
        ApiError::new(StatusCode::NOT_FOUND, "not_found", format!("{what} {id} not found"))
    }

    fn internal(e: impl std::fmt::Display) -> Self {
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string())
    }
}

impl From<DesignError> for ApiError {
    fn from(e: DesignError) -> Self {
        let path = e.path();
        let code = match e {
            DesignError::Parse { .. } => "parse_error",
            _ => "validation_error",
        };
        let mut err = ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, code, e.to_string());
        if matches!(e, DesignError::Parse { .. }) {
            err.status = StatusCode::BAD_REQUEST;
        }
        err.path = path;
        err
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (
            self.status,
            Json(json!({"code": self.code, "message": self.message, "path": self.path})),
        )
            .into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn parse_body<T: DeserializeOwned>(body: &str) -> ApiResult<T> {
    let de = &mut serde_json::Deserializer::from_str(body);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        ApiError::new(StatusCode::BAD_REQUEST, "bad_request", e.into_inner().to_string()).at(path)
    })
}

// Store

/// Directory-backed record store.
#[derive(Debug, Clone)]
pub struct Store {
    root: PathBuf,
}

impl Store {
    pub fn open(root: impl Into<PathBuf>) -> std::io::Result<Self> {
        let root = root.into();
        for sub in ["designs", "sessions", "reports"] {
            fs::create_dir_all(root.join(sub))?;
        }
        Ok(Store { root })
    }

    fn file(&self, kind: &str, key: &str) -> ApiResult<PathBuf> {
        if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '-') {
            return Err(ApiError::not_found(kind.trim_end_matches('s'), key));
        }
        Ok(self.root.join(kind).join(format!("{key}.json")))
    }

    fn write(&self, kind: &str, key: &str, bytes: &[u8]) -> ApiResult<()> {
        let path = self.file(kind, key)?;
        let tmp = path.with_extension(format!("tmp-{}", uuid::Uuid::new_v4()));
        let mut f = fs::File::create(&tmp).map_err(ApiError::internal)?;
        f.write_all(bytes).map_err(ApiError::internal)?;
        f.sync_all().map_err(ApiError::internal)?;
        fs::rename(&tmp, &path).map_err(ApiError::internal)
    }

    fn read(&self, kind: &str, key: &str) -> ApiResult<Option<String>> {
        match fs::read_to_string(self.file(kind, key)?) {
            Ok(s) => Ok(Some(s)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(ApiError::internal(e)),
        }
    }

    fn put_json<T: Serialize>(&self, kind: &str, key: &str, value: &T) -> ApiResult<()> {
        let bytes = serde_json::to_vec_pretty(value).map_err(ApiError::internal)?;
        self.write(kind, key, &bytes)
    }

    fn get_json<T: DeserializeOwned>(&self, kind: &str, key: &str) -> ApiResult<Option<T>> {
        self.read(kind, key)?
            .map(|s| serde_json::from_str(&s).map_err(ApiError::internal))
            .transpose()
    }

    /// Store a design under its content hash and return the id.
    pub fn put_design(&self, d: &Design) -> ApiResult<String> {
        let text = emit_design(d);
        let id = hex::encode(&Sha256::digest(text.as_bytes())[..16]);
        if self.read("designs", &id)?.is_none() {
            self.write("designs", &id, text.as_bytes())?;
        }
        Ok(id)
    }

    pub fn get_design(&self, id: &str) -> ApiResult<Design> {
        let raw = self.read("designs", id)?.ok_or_else(|| ApiError::not_found("design", id))?;
        parse_design(&raw).map_err(ApiError::internal)
    }
}

fn now_secs() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

// Sessions

/// Backend choice as stored with a session or sent with a request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendSpec {
    pub kind: BackendKind,
    #[serde(default)]
    pub solver: SolverConfig,
}

impl Default for BackendSpec {
    fn default() -> Self {
        BackendSpec {
            kind: BackendKind::Solver,
            solver: SolverConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub operation: EditOperation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub added: Option<Element>,
    /// Seed of the graph extraction for this step.
    pub graph_seed: u64,
    pub backend: BackendSpec,
    pub design: Design,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub id: String,
    pub design_id: String,
    pub original: Design,
    pub alpha: f64,
    pub seed: u64,
    pub backend: BackendSpec,
    pub history: Vec<HistoryEntry>,
    pub cursor: usize,
    pub created: u64,
    pub updated: u64,
}

impl Session {
    pub fn current(&self) -> &Design {
        match self.cursor {
            0 => &self.original,
            c => &self.history[c - 1].design,
        }
    }

    fn view(&self) -> Value {
        json!({
            "id": self.id,
            "design_id": self.design_id,
            "alpha": self.alpha,
            "backend": self.backend,
            "cursor": self.cursor,
            "history_len": self.history.len(),
            "design": self.current(),
            "history": self.history.iter().map(|h| json!({
                "operation": h.operation.to_string(),
                "backend": h.backend.kind,
                "diagnostics": h.diagnostics,
            })).collect::<Vec<_>>(),
        })
    }
}

/// Run one edit on `current` the way a session does. Deterministic for the
/// solver backend, so history can be replayed.
pub fn run_session_step(
    current: &Design,
    op: EditOperation,
    added: Option<Element>,
    alpha: f64,
    graph_seed: u64,
    backend: &EditorBackend,
) -> Result<(Design, Diagnostics, RelationGraph), String> {
    let edit = prepare_edit(current, op, added, alpha, &mut seeded_rng(graph_seed)).map_err(|e| e.to_string())?;
    let out = edit_via_backend(backend, current, &edit.pruned_graph, &op, edit.added.as_ref()).map_err(|e| e.to_string())?;
    Ok((out.design, out.diagnostics, edit.pruned_graph))
}

/// Fold the solver-backed history of a session over its original design.
pub fn replay(session: &Session, upto: usize, client: Option<Arc<dyn ChatClient>>) -> Result<Design, String> {
    let mut d = session.original.clone();
    for h in &session.history[..upto] {
        let backend = make_backend(&h.backend, client.clone()).map_err(|e| e.message)?;
        d = run_session_step(&d, h.operation, h.added.clone(), session.alpha, h.graph_seed, &backend)?.0;
    }
    Ok(d)
}

fn make_backend(spec: &BackendSpec, client: Option<Arc<dyn ChatClient>>) -> ApiResult<EditorBackend> {
    spec.solver
        .validate()
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "bad_request", e.to_string()).at("backend.solver"))?;
    match spec.kind {
        BackendKind::Solver => Ok(EditorBackend::solver(spec.solver.clone())),
        BackendKind::ExternalModel => {
            let client = client.ok_or_else(|| {
                ApiError::new(
                    StatusCode::SERVICE_UNAVAILABLE,
                    "backend_unavailable",
                    "no external model client is configured",
                )
            })?;
            Ok(EditorBackend::external(client, spec.solver.clone()))
        }
    }
}

// Evaluation jobs

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JobState {
    Running,
    Done,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobStatus {
    pub id: String,
    pub status: JobState,
    pub processed: usize,
    pub total: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<EvalReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EvalRequest {
    /// Inline cases.
    #[serde(default)]
    cases: Option<Vec<EvalInput>>,
    /// Server-side line-delimited file of cases.
    #[serde(default)]
    cases_path: Option<PathBuf>,
    /// Server-side design corpus (directory or line-delimited file); draws
    /// are synthesized from it.
    #[serde(default)]
    corpus_path: Option<PathBuf>,
    #[serde(default = "default_setting")]
    setting: Setting,
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_draws")]
    samples_per_design: usize,
    #[serde(default)]
    backend: BackendSpec,
    #[serde(default = "default_alpha")]
    alpha: f64,
    #[serde(default = "default_tol")]
    tol: f64,
}

fn default_setting() -> Setting {
    Setting::Generalization
}
fn default_draws() -> usize {
    1
}
fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}
fn default_tol() -> f64 {
    DEFAULT_OP_TOLERANCE
}

/// Read a line-delimited case file.
pub fn read_cases(path: &Path) -> Result<Vec<Result<EvalInput, String>>, String> {
    let raw = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(raw
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| serde_json::from_str(l).map_err(|e| format!("line {}: {e}", n + 1)))
        .collect())
}

/// Synthesize `per_design` draws per design of a corpus.
pub fn synthesize_cases(designs: &[(String, Design)], setting: Setting, seed: u64, per_design: usize, alpha: f64) -> Vec<Result<EvalInput, String>> {
    let donors = donor_pool(designs.iter().map(|(_, d)| d));
    let mut out = Vec::new();
    for (i, (id, d)) in designs.iter().enumerate() {
        for k in 0..per_design {
            let mut rng = seeded_rng(derive_seed(seed, &[i as u64, k as u64]));
            out.push(
                synthesize(setting, d, &donors, alpha, None, &mut rng)
                    .map(|edit| EvalInput { edit, edited: None })
                    .map_err(|e| format!("design {id}: {e}")),
            );
        }
    }
    out
}

// State and routes

#[derive(Clone)]
pub struct AppState {
    store: Store,
    client: Option<Arc<dyn ChatClient>>,
    session_locks: Arc<Mutex<HashMap<String, Arc<tokio::sync::Mutex<()>>>>>,
    jobs: Arc<Mutex<HashMap<String, JobStatus>>>,
}

impl AppState {
    pub fn new(store: Store, client: Option<Arc<dyn ChatClient>>) -> Self {
        AppState {
            store,
            client,
            session_locks: Arc::default(),
            jobs: Arc::default(),
        }
    }

    fn lock_for(&self, session: &str) -> Arc<tokio::sync::Mutex<()>> {
        self.session_locks.lock().unwrap().entry(session.to_owned()).or_default().clone()
    }

    fn load_session(&self, id: &str) -> ApiResult<Session> {
        self.store
            .get_json("sessions", id)?
            .ok_or_else(|| ApiError::not_found("session", id))
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/designs", post(create_design))
        .route("/designs/:id", get(get_design))
        .route("/designs/:id/graph", post(design_graph))
        .route("/sessions", post(create_session))
        .route("/sessions/:id", get(get_session))
        .route("/sessions/:id/edits", post(apply_edit))
        .route("/sessions/:id/undo", post(undo))
        .route("/sessions/:id/redo", post(redo))
        .route("/eval", post(start_eval))
        .route("/eval/:job", get(get_eval))
        .with_state(state)
}

async fn create_design(State(st): State<AppState>, body: String) -> ApiResult<(StatusCode, Json<Value>)> {
    let d = parse_design(&body)?;
    let id = st.store.put_design(&d)?;
    Ok((StatusCode::CREATED, Json(json!({"id": id, "design": d}))))
}

async fn get_design(State(st): State<AppState>, UrlPath(id): UrlPath<String>) -> ApiResult<Json<Design>> {
    Ok(Json(st.store.get_design(&id)?))
}

#[derive(Deserialize)]
struct GraphQuery {
    alpha: Option<f64>,
    seed: Option<u64>,
}

async fn design_graph(
    State(st): State<AppState>,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<GraphQuery>,
) -> ApiResult<Json<Value>> {
    let d = st.store.get_design(&id)?;
    let g = build_relation_graph(&d, q.alpha.unwrap_or(DEFAULT_ALPHA), &mut seeded_rng(q.seed.unwrap_or(0)))
        .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_graph", e.to_string()).at("alpha"))?;
    Ok(Json(json!({"graph": g, "text": serialize_graph(&g)})))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateSession {
    design_id: String,
    #[serde(default)]
    backend: BackendSpec,
    #[serde(default = "default_alpha")]
    alpha: f64,
    #[serde(default)]
    seed: u64,
}

async fn create_session(State(st): State<AppState>, body: String) -> ApiResult<(StatusCode, Json<Value>)> {
    let req: CreateSession = parse_body(&body)?;
    let original = st.store.get_design(&req.design_id)?;
    if !(req.alpha > 0.0 && req.alpha < 1.0) {
        return Err(ApiError::new(StatusCode::BAD_REQUEST, "bad_request", "alpha must be in (0, 1)").at("alpha"));
    }
    make_backend(&req.backend, st.client.clone())?;
    let now = now_secs();
    let s = Session {
        id: uuid::Uuid::new_v4().to_string(),
        design_id: req.design_id,
        original,
        alpha: req.alpha,
        seed: req.seed,
        backend: req.backend,
        history: Vec::new(),
        cursor: 0,
        created: now,
        updated: now,
    };
    st.store.put_json("sessions", &s.id, &s)?;
    Ok((StatusCode::CREATED, Json(s.view())))
}

async fn get_session(State(st): State<AppState>, UrlPath(id): UrlPath<String>) -> ApiResult<Json<Value>> {
    Ok(Json(st.load_session(&id)?.view()))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EditRequest {
    #[serde(default)]
    op: Option<EditOperation>,
    #[serde(default)]
    instruction: Option<String>,
    /// Element introduced by an add.
    #[serde(default)]
    element: Option<Element>,
    #[serde(default)]
    backend: Option<BackendSpec>,
    /// Compute the result without committing it.
    #[serde(default)]
    preview: bool,
}

async fn apply_edit(State(st): State<AppState>, UrlPath(id): UrlPath<String>, body: String) -> ApiResult<Json<Value>> {
    let req: EditRequest = parse_body(&body)?;
    let lock = st.lock_for(&id);
    let _guard = lock.lock().await;
    let mut session = st.load_session(&id)?;
    let spec = req.backend.clone().unwrap_or_else(|| session.backend.clone());
    let backend = make_backend(&spec, st.client.clone())?;
    let client = st.client.clone();
    let base = session.clone();

    let steps = tokio::task::spawn_blocking(move || -> ApiResult<Vec<HistoryEntry>> {
        let ops: Vec<EditOperation> = match (req.op, req.instruction) {
            (Some(op), None) => vec![op],
            (None, Some(text)) => {
                let client = client.ok_or_else(|| {
                    ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "backend_unavailable", "no model client for instructions")
                })?;
                translate_instruction(&text, base.current(), client.as_ref()).map_err(|e| {
                    ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "translation_failed", e.to_string()).at("instruction")
                })?
            }
            _ => {
                return Err(ApiError::new(StatusCode::BAD_REQUEST, "bad_request", "send exactly one of op or instruction"))
            }
        };
        let mut current = base.current().clone();
        let mut element = req.element;
        let mut entries = Vec::new();
        for (k, op) in ops.into_iter().enumerate() {
            let added = if matches!(op, EditOperation::Add { .. }) { element.take() } else { None };
            let graph_seed = derive_seed(base.seed, &[(base.cursor + k) as u64]);
            let (design, diagnostics, _) =
                run_session_step(&current, op, added.clone(), base.alpha, graph_seed, &backend).map_err(|e| {
                    ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "edit_failed", format!("{op}: {e}")).at(format!("op[{k}]"))
                })?;
            current = design.clone();
            entries.push(HistoryEntry {
                operation: op,
                added,
                graph_seed,
                backend: spec.clone(),
                design,
                diagnostics,
            });
        }
        Ok(entries)
    })
    .await
    .map_err(ApiError::internal)??;

    let edits: Vec<Value> = steps
        .iter()
        .map(|h| json!({"operation": h.operation.to_string(), "design": h.design, "diagnostics": h.diagnostics}))
        .collect();
    if !req.preview {
        session.history.truncate(session.cursor);
        session.history.extend(steps);
        session.cursor = session.history.len();
        session.updated = now_secs();
        st.store.put_json("sessions", &session.id, &session)?;
    }
    Ok(Json(json!({"session": session.view(), "edits": edits, "committed": !req.preview})))
}

async fn move_cursor(st: AppState, id: String, forward: bool) -> ApiResult<Json<Value>> {
    let lock = st.lock_for(&id);
    let _guard = lock.lock().await;
    let mut session = st.load_session(&id)?;
    if forward {
        if session.cursor >= session.history.len() {
            return Err(ApiError::new(StatusCode::CONFLICT, "history_boundary", "nothing to redo"));
        }
        session.cursor += 1;
    } else {
        if session.cursor == 0 {
            return Err(ApiError::new(StatusCode::CONFLICT, "history_boundary", "nothing to undo"));
        }
        session.cursor -= 1;
    }
    session.updated = now_secs();
    st.store.put_json("sessions", &session.id, &session)?;
    Ok(Json(session.view()))
}

async fn undo(State(st): State<AppState>, UrlPath(id): UrlPath<String>) -> ApiResult<Json<Value>> {
    move_cursor(st, id, false).await
}

async fn redo(State(st): State<AppState>, UrlPath(id): UrlPath<String>) -> ApiResult<Json<Value>> {
    move_cursor(st, id, true).await
}

async fn start_eval(State(st): State<AppState>, body: String) -> ApiResult<(StatusCode, Json<JobStatus>)> {
    let req: EvalRequest = parse_body(&body)?;
    let backend = make_backend(&req.backend, st.client.clone())?;
    let cases: Vec<Result<EvalInput, String>> = match (req.cases, req.cases_path, req.corpus_path) {
        (Some(c), None, None) => c.into_iter().map(Ok).collect(),
        (None, Some(p), None) => read_cases(&p)
            .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "corpus_unreadable", e).at("cases_path"))?,
        (None, None, Some(p)) => {
            let designs = read_designs(&p).map_err(|e| {
                ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "corpus_unreadable", e.to_string()).at("corpus_path")
            })?;
            synthesize_cases(&designs, req.setting, req.seed, req.samples_per_design.max(1), req.alpha)
        }
        _ => {
            return Err(ApiError::new(
                StatusCode::BAD_REQUEST,
                "bad_request",
                "send exactly one of cases, cases_path or corpus_path",
            ))
        }
    };
    let id = uuid::Uuid::new_v4().to_string();
    let status = JobStatus {
        id: id.clone(),
        status: JobState::Running,
        processed: 0,
        total: cases.len(),
        report: None,
        error: None,
    };
    st.jobs.lock().unwrap().insert(id.clone(), status.clone());
    let (jobs, store, job) = (st.jobs.clone(), st.store.clone(), id.clone());
    tokio::task::spawn_blocking(move || {
        let report = evaluate_edits(cases, &backend, req.alpha, req.tol, |n| {
            if let Some(s) = jobs.lock().unwrap().get_mut(&job) {
                s.processed = n;
            }
        });
        let mut final_status = jobs.lock().unwrap().get(&job).cloned().expect("job registered before start");
        final_status.status = JobState::Done;
        final_status.report = Some(report);
        if let Err(e) = store.put_json("reports", &job, &final_status) {
            final_status.status = JobState::Failed;
            final_status.error = Some(e.message);
        }
        jobs.lock().unwrap().insert(job, final_status);
    });
    Ok((StatusCode::ACCEPTED, Json(status)))
}

async fn get_eval(State(st): State<AppState>, UrlPath(job): UrlPath<String>) -> ApiResult<Json<JobStatus>> {
    if let Some(s) = st.jobs.lock().unwrap().get(&job) {
        return Ok(Json(s.clone()));
    }
    st.store
        .get_json("reports", &job)?
        .map(Json)
        .ok_or_else(|| ApiError::not_found("evaluation job", &job))
}

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub listen: SocketAddr,
    pub store_dir: PathBuf,
}

/// Bind and serve until the process is stopped.
pub async fn serve(cfg: ServiceConfig, client: Option<Arc<dyn ChatClient>>) -> std::io::Result<()> {
    let store = Store::open(&cfg.store_dir)?;
    let listener = tokio::net::TcpListener::bind(cfg.listen).await?;
    tracing::info!(addr = %listener.local_addr()?, store = %cfg.store_dir.display(), "listening");
    axum::serve(listener, router(AppState::new(store, client))).await
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ops::parse_operation;

    #[test]
    fn store_rejects_path_tricks_and_dedups() {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::open(dir.path()).unwrap();
        assert!(store.read("designs", "../etc").is_err());
        let d = parse_design(crate::design::POSTER_DOCUMENT).unwrap();
        let a = store.put_design(&d).unwrap();
        let b = store.put_design(&d).unwrap();
        assert_eq!(a, b);
        assert_eq!(store.get_design(&a).unwrap(), d);
        let leftovers = fs::read_dir(dir.path().join("designs")).unwrap().count();
        assert_eq!(leftovers, 1);
    }

    #[test]
    fn operations_parse_as_strings_in_requests() {
        let req: EditRequest = parse_body(r#"{"op": "move element 3 to {\"x\": 583, \"y\": 394}"}"#).unwrap();
        assert_eq!(req.op, Some(parse_operation("move element 3 to {\"x\": 583, \"y\": 394}").unwrap()));
        let err = parse_body::<EditRequest>(r#"{"op": "move element 3"}"#).unwrap_err();
        assert_eq!(err.path.as_deref(), Some("op"));
    }
}

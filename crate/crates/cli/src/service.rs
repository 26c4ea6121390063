//! JSON-over-HTTP service for the exploration UI.
//!
//! Mining requests are queued FIFO and drained by a fixed number of
//! workers. Reads never wait on the queue.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde_json::{json, Value};
use sinet_core::io::FORMAT_VERSION;
use tokio::sync::mpsc;

use crate::engine::{self, Bundle, MineRequest};
use crate::ledger::{self, RunRecord, RunStatus};

#[derive(Debug, Clone)]
pub struct ServiceOptions {
    pub workers: usize,
    /// Completed runs are appended here when set.
    pub ledger: Option<PathBuf>,
}

#[derive(Debug, Clone)]
struct Run {
    request: MineRequest,
    status: RunStatus,
    artifact: Option<Vec<u8>>,
    error: Option<String>,
}

struct AppState {
    bundle: Arc<Bundle>,
    runs: Mutex<BTreeMap<String, Run>>,
    queue: mpsc::UnboundedSender<String>,
    next_id: AtomicU64,
    ledger: Option<PathBuf>,
}

type Shared = Arc<AppState>;

fn error(status: StatusCode, message: impl Into<String>) -> Response {
    (status, Json(json!({"format_version": FORMAT_VERSION, "error": message.into()}))).into_response()
}

pub fn router(bundle: Bundle, options: ServiceOptions) -> Router {
    let (tx, rx) = mpsc::unbounded_channel::<String>();
    let state = Arc::new(AppState {
        bundle: Arc::new(bundle),
        runs: Mutex::new(BTreeMap::new()),
        queue: tx,
        next_id: AtomicU64::new(1),
        ledger: options.ledger,
    });
    let rx = Arc::new(tokio::sync::Mutex::new(rx));
    for _ in 0..options.workers.max(1) {
        tokio::spawn(worker(state.clone(), rx.clone()));
    }
    Router::new()
        .route("/api/graph", get(graph))
        .route("/api/mine", post(submit))
        .route("/api/runs/{id}", get(run_status))
        .route("/api/runs/{id}/artifact", get(artifact))
        .route("/api/patterns/{id}/{index}/members", get(members))
        .with_state(state)
}

async fn worker(state: Shared, rx: Arc<tokio::sync::Mutex<mpsc::UnboundedReceiver<String>>>) {
    loop {
        // hold the lock only while dequeuing so workers take jobs in order
        let Some(id) = rx.lock().await.recv().await else { return };
        let request = state.runs.lock().expect("run table").get(&id).map(|r| r.request.clone());
        let Some(request) = request else { continue };
        let bundle = state.bundle.clone();
        let req = request.clone();
        let result = tokio::task::spawn_blocking(move || engine::run(&bundle, &req))
            .await
            .unwrap_or_else(|e| Err(sinet_core::Error::Domain(format!("mining task panicked: {e}"))));
        let mut record = RunRecord::new(id.clone(), &format!("serve:{}", request.engine()));
        if let Value::Object(params) = serde_json::to_value(&request).expect("serializable")["parameters"].clone() {
            record.parameters = params.into_iter().collect();
        }
        record.inputs = state.bundle.digests.clone();
        {
            let mut runs = state.runs.lock().expect("run table");
            let run = runs.get_mut(&id).expect("queued run exists");
            match result {
                Ok(bytes) => {
                    record.output_digest = Some(ledger::digest(&bytes));
                    record.status = RunStatus::Done;
                    run.artifact = Some(bytes);
                    run.status = RunStatus::Done;
                }
                Err(e) => {
                    record.error = Some(e.to_string());
                    record.status = RunStatus::Failed;
                    run.error = Some(e.to_string());
                    run.status = RunStatus::Failed;
                }
            }
        }
        if let Some(path) = &state.ledger {
            let _ = ledger::append(path, &record);
        }
    }
}

async fn graph(State(state): State<Shared>) -> Response {
    let b = &state.bundle;
    let nodes: Vec<Value> = b
        .graph
        .nodes()
        .iter()
        .map(|n| {
            let attrs: Vec<String> = b.attributes.selectors(n).map(|s| s.iter().map(ToString::to_string).collect()).unwrap_or_default();
            json!({"id": n, "attributes": attrs})
        })
        .collect();
    let edges: Vec<Value> =
        b.graph.named_edges().map(|(p, w)| json!({"source": p.first(), "target": p.second(), "weight": w})).collect();
    let mut summary: BTreeMap<&str, BTreeMap<&str, usize>> = BTreeMap::new();
    for (_, sels) in b.attributes.actors() {
        for s in sels {
            *summary.entry(&s.attribute).or_default().entry(&s.value).or_insert(0) += 1;
        }
    }
    Json(json!({
        "format_version": FORMAT_VERSION,
        "weighting_mode": b.graph.mode().to_string(),
        "nodes": nodes,
        "edges": edges,
        "attributes": summary,
    }))
    .into_response()
}

async fn submit(State(state): State<Shared>, body: Bytes) -> Response {
    let request: MineRequest = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => return error(StatusCode::BAD_REQUEST, format!("malformed request: {e}")),
    };
    if let Err(e) = request.validate() {
        return error(StatusCode::BAD_REQUEST, e.to_string());
    }
    if matches!(request, MineRequest::Emm(_)) && state.bundle.instances.is_none() {
        return error(StatusCode::BAD_REQUEST, "the data bundle has no instance table");
    }
    let id = format!("run-{:06}", state.next_id.fetch_add(1, Ordering::Relaxed));
    state
        .runs
        .lock()
        .expect("run table")
        .insert(id.clone(), Run { request, status: RunStatus::Running, artifact: None, error: None });
    if state.queue.send(id.clone()).is_err() {
        return error(StatusCode::SERVICE_UNAVAILABLE, "worker pool is gone");
    }
    (StatusCode::ACCEPTED, Json(json!({"format_version": FORMAT_VERSION, "run_id": id, "status": RunStatus::Running})))
        .into_response()
}

fn lookup(state: &AppState, id: &str) -> Result<Run, Response> {
    state
        .runs
        .lock()
        .expect("run table")
        .get(id)
        .cloned()
        .ok_or_else(|| error(StatusCode::NOT_FOUND, format!("unknown run `{id}`")))
}

fn parsed(run: &Run) -> Option<Value> {
    serde_json::from_slice(run.artifact.as_deref()?).ok()
}

async fn run_status(State(state): State<Shared>, Path(id): Path<String>) -> Response {
    let run = match lookup(&state, &id) {
        Ok(r) => r,
        Err(resp) => return resp,
    };
    let mut body = json!({
        "format_version": FORMAT_VERSION,
        "run_id": id,
        "engine": run.request.engine(),
        "status": run.status,
    });
    if let Some(doc) = parsed(&run) {
        body["parameters"] = doc["parameters"].clone();
        body["patterns"] = doc["patterns"].clone();
        body["stats"] = doc["stats"].clone();
    }
    if let Some(e) = &run.error {
        body["error"] = json!(e);
    }
    Json(body).into_response()
}

/// Exact artifact bytes, identical to what the CLI writes.
async fn artifact(State(state): State<Shared>, Path(id): Path<String>) -> Response {
    let run = match lookup(&state, &id) {
        Ok(r) => r,
        Err(resp) => return resp,
    };
    match (run.status, run.artifact) {
        (RunStatus::Done, Some(bytes)) => ([(header::CONTENT_TYPE, "application/json")], bytes).into_response(),
        (RunStatus::Failed, _) => error(StatusCode::CONFLICT, run.error.unwrap_or_default()),
        _ => error(StatusCode::CONFLICT, format!("run `{id}` has not finished")),
    }
}

async fn members(State(state): State<Shared>, Path((id, index)): Path<(String, String)>) -> Response {
    let run = match lookup(&state, &id) {
        Ok(r) => r,
        Err(resp) => return resp,
    };
    let Ok(index) = index.parse::<usize>() else {
        return error(StatusCode::BAD_REQUEST, format!("`{index}` is not a pattern index"));
    };
    let Some(doc) = parsed(&run) else {
        return error(StatusCode::CONFLICT, format!("run `{id}` has no patterns"));
    };
    let Some(pattern) = doc["patterns"].get(index) else {
        return error(StatusCode::NOT_FOUND, format!("run `{id}` has no pattern {index}"));
    };
    let selectors: Vec<String> = serde_json::from_value(pattern["selectors"].clone()).unwrap_or_default();
    match engine::members(&state.bundle, &run.request, &selectors) {
        Ok(mut body) => {
            body["format_version"] = json!(FORMAT_VERSION);
            body["run_id"] = json!(id);
            body["index"] = json!(index);
            body["selectors"] = json!(selectors);
            Json(body).into_response()
        }
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    }
}

/// A running service on its own runtime thread.
pub struct ServiceHandle {
    pub addr: SocketAddr,
    shutdown: Option<tokio::sync::oneshot::Sender<()>>,
    thread: Option<std::thread::JoinHandle<()>>,
}

impl Drop for ServiceHandle {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

fn runtime() -> std::io::Result<tokio::runtime::Runtime> {
    tokio::runtime::Builder::new_multi_thread().enable_all().build()
}

/// Binds `addr` (port 0 picks a free port) and serves in the background
/// until the handle is dropped.
pub fn spawn(bundle: Bundle, options: ServiceOptions, addr: &str) -> std::io::Result<ServiceHandle> {
    let listener = std::net::TcpListener::bind(addr)?;
    listener.set_nonblocking(true)?;
    let local = listener.local_addr()?;
    let (tx, rx) = tokio::sync::oneshot::channel::<()>();
    let rt = runtime()?;
    let thread = std::thread::spawn(move || {
        rt.block_on(async move {
            let listener = tokio::net::TcpListener::from_std(listener).expect("tokio listener");
            let app = router(bundle, options);
            let _ = axum::serve(listener, app)
                .with_graceful_shutdown(async {
                    let _ = rx.await;
                })
                .await;
        });
    });
    Ok(ServiceHandle { addr: local, shutdown: Some(tx), thread: Some(thread) })
}

/// Serves in the foreground; `on_ready` receives the bound address.
pub fn serve_blocking(bundle: Bundle, options: ServiceOptions, addr: &str, on_ready: impl FnOnce(SocketAddr)) -> std::io::Result<()> {
    let rt = runtime()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr).await?;
        on_ready(listener.local_addr()?);
        axum::serve(listener, router(bundle, options)).await
    })
}

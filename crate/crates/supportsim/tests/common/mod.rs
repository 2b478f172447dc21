#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::Value;
use tower::ServiceExt;

use supportsim::gateway::SharedBackend;
use supportsim::service::{router, statistical_model, AppState, Model};
use supportsim_core::backend::{BackendError, ChatBackend, ChatRequest, RoleTag};
use supportsim_core::counselor::TransitionModel;
use supportsim_core::Dialogue;

pub fn manifest_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

pub fn starter_pools() -> supportsim_core::pools::SeedPools {
    supportsim::io::load_pools(&manifest_dir().join("data/pools.jsonl")).unwrap()
}

pub fn transition() -> TransitionModel {
    let corpus: Vec<Dialogue> = starter_pools().scenario_pool().iter().map(|s| s.dialogue.clone()).collect();
    TransitionModel::fit(&corpus).unwrap()
}

/// Numbered replies tagged with its name; fails while `fail` is set.
pub struct Counting {
    pub name: &'static str,
    pub calls: AtomicUsize,
    pub fail: AtomicBool,
}

impl Counting {
    pub fn new(name: &'static str) -> Arc<Self> {
        Arc::new(Self { name, calls: AtomicUsize::new(0), fail: AtomicBool::new(false) })
    }
}

impl ChatBackend for Counting {
    fn complete(&self, _role: RoleTag, _request: &ChatRequest) -> Result<String, BackendError> {
        if self.fail.load(Ordering::SeqCst) {
            return Err(BackendError::Transport("stub outage".into()));
        }
        let n = self.calls.fetch_add(1, Ordering::SeqCst) + 1;
        Ok(format!("{} reply {n}. I hear you.", self.name))
    }
}

pub fn model(backend: SharedBackend) -> Model {
    statistical_model(backend, transition(), 8)
}

pub fn app_with(models: Vec<(&str, SharedBackend)>, seed: u64) -> Router {
    let models: BTreeMap<String, Model> = models.into_iter().map(|(n, b)| (n.to_string(), model(b))).collect();
    let state = AppState::new(models, None, seed).unwrap().with_pools(starter_pools());
    router(Arc::new(state), &["*".to_string()], None).unwrap()
}

pub async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let builder = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => builder.header("content-type", "application/json").body(Body::from(b.to_string())).unwrap(),
        None => builder.body(Body::empty()).unwrap(),
    };
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap_or(Value::Null) };
    (status, value)
}

pub fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

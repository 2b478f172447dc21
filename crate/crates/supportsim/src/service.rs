//! HTTP session service for live rating: a human plays the seeker, one or
//! two configured models play the supporter, and the finished session is
//! exported as an ordinary dialogue record.

use std::collections::{BTreeMap, HashMap};
use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::net::SocketAddr;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use axum::extract::{Path as UrlPath, State};
use axum::http::{HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use tokio::sync::Mutex as AsyncMutex;
use tower_http::cors::{AllowOrigin, Any, CorsLayer};
use tower_http::services::ServeDir;

use supportsim_core::counselor::{Counselor, CounselorMode, Selection};
use supportsim_core::pools::SeedPools;
use supportsim_core::role::RoleSettings;
use supportsim_core::strategy::StrategyLabel;
use supportsim_core::supporter::supporter_turn;
use supportsim_core::taxonomy::{Category, ProblemType, Taxonomy};
use supportsim_core::{Dialogue, Meta, Utterance};

use crate::config::Config;
use crate::gateway::{build_backend, SharedBackend};

/// Problem type recorded when the session did not name one.
pub const UNSPECIFIED: &str = "Unspecified";
pub const MAX_MESSAGE_CHARS: usize = 4000;
pub const RATING_ASPECTS: [&str; 7] =
    ["Empathy", "Informativeness", "Coherence", "Suggestion", "Understanding", "Helpfulness", "Overall"];

/// A named supporter model: the backend that writes replies (and answers
/// prompted counselor questions) plus its counselor.
#[derive(Clone)]
pub struct Model {
    pub backend: SharedBackend,
    pub counselor: Counselor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArmKind {
    #[default]
    Single,
    Ab,
}

#[derive(Debug, Clone, Serialize)]
struct Branch {
    label: &'static str,
    model: String,
    utterances: Vec<Utterance>,
}

struct Session {
    id: String,
    kind: ArmKind,
    problem_type: ProblemType,
    scenario: String,
    branches: Vec<Branch>,
    /// Seeker text whose replies failed; prepended to the next message.
    pending: Option<String>,
    rating: Option<Value>,
    exemplar: Dialogue,
    seed: u64,
    rng: ChaCha8Rng,
}

impl Session {
    fn closed(&self) -> bool {
        self.rating.is_some()
    }

    fn mapping(&self) -> Value {
        let mut m = Map::new();
        for b in &self.branches {
            m.insert(b.label.to_string(), Value::String(b.model.clone()));
        }
        Value::Object(m)
    }

    fn view(&self) -> Value {
        let branches: Vec<Value> = self
            .branches
            .iter()
            .map(|b| {
                let mut v = json!({"label": b.label, "utterances": b.utterances});
                if self.kind == ArmKind::Single || self.closed() {
                    v["model"] = Value::String(b.model.clone());
                }
                v
            })
            .collect();
        json!({
            "session_id": self.id,
            "arm": self.kind,
            "problem_type": self.problem_type.name,
            "category": self.problem_type.category,
            "scenario": self.scenario,
            "branches": branches,
            "pending": self.pending,
            "closed": self.closed(),
        })
    }

    fn export(&self, created_at: &str) -> Dialogue {
        let mut d = Dialogue::new(self.id.clone(), self.problem_type.clone(), self.scenario.clone());
        d.utterances = self.branches[0].utterances.clone();
        if let Some(p) = &self.pending {
            d.utterances.push(Utterance::seeker(p.clone()));
        }
        let mut extra = Map::new();
        extra.insert("session_id".into(), Value::String(self.id.clone()));
        extra.insert("arm".into(), json!(self.kind));
        match self.kind {
            ArmKind::Single => {
                extra.insert("model".into(), Value::String(self.branches[0].model.clone()));
            }
            ArmKind::Ab => {
                let mut branches = Map::new();
                for b in &self.branches {
                    branches.insert(b.label.to_string(), json!({"model": b.model, "utterances": b.utterances}));
                }
                extra.insert("branches".into(), Value::Object(branches));
            }
        }
        if let Some(r) = &self.rating {
            extra.insert("rating".into(), r.clone());
        }
        d.meta = Meta {
            generator_tag: "supportsim-service".into(),
            rng_seed: self.seed,
            created_at: created_at.to_string(),
            aborted: false,
            extra,
        };
        d
    }
}

pub struct AppState {
    models: BTreeMap<String, Model>,
    default_model: String,
    settings: RoleSettings,
    taxonomy: Taxonomy,
    pools: SeedPools,
    created_at: String,
    rng: Mutex<ChaCha8Rng>,
    counter: AtomicU64,
    sessions: Mutex<HashMap<String, Arc<AsyncMutex<Session>>>>,
    log: Option<Mutex<BufWriter<File>>>,
}

impl AppState {
    pub fn new(models: BTreeMap<String, Model>, default_model: Option<String>, seed: u64) -> anyhow::Result<Self> {
        let default_model = match default_model {
            Some(name) if models.contains_key(&name) => name,
            Some(name) => anyhow::bail!("default_model {name:?} is not a configured model"),
            None => models.keys().next().cloned().ok_or_else(|| anyhow::anyhow!("no models configured"))?,
        };
        Ok(Self {
            models,
            default_model,
            settings: RoleSettings::default(),
            taxonomy: Taxonomy::builtin(),
            pools: SeedPools::new(),
            created_at: supportsim_core::engine::DEFAULT_CREATED_AT.into(),
            rng: Mutex::new(ChaCha8Rng::seed_from_u64(seed)),
            counter: AtomicU64::new(0),
            sessions: Mutex::new(HashMap::new()),
            log: None,
        })
    }

    pub fn with_pools(mut self, pools: SeedPools) -> Self {
        self.pools = pools;
        self
    }

    pub fn with_settings(mut self, settings: RoleSettings) -> Self {
        self.settings = settings;
        self
    }

    pub fn with_taxonomy(mut self, taxonomy: Taxonomy) -> Self {
        self.taxonomy = taxonomy;
        self
    }

    pub fn with_created_at(mut self, created_at: impl Into<String>) -> Self {
        self.created_at = created_at.into();
        self
    }

    pub fn with_log(mut self, path: &Path) -> anyhow::Result<Self> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        self.log = Some(Mutex::new(BufWriter::new(file)));
        Ok(self)
    }

    /// Models from `[service.models]`; without any, one model named
    /// "default" on the supporter backend, which also answers prompted
    /// counselor questions.
    pub fn from_config(config: &Config) -> anyhow::Result<Self> {
        let pools = match &config.data.pools {
            Some(_) => config.pools()?,
            None => SeedPools::new(),
        };
        let transition = match (&config.counselor.model_path, pools.scenario_pool().is_empty()) {
            (None, true) => None,
            _ => Some(config.transition_model(&pools)?),
        };
        let counselor = |mode: CounselorMode| -> anyhow::Result<Counselor> {
            if mode == CounselorMode::Statistical && transition.is_none() {
                anyhow::bail!("statistical counselor needs [counselor] model_path or a seed pool");
            }
            Ok(Counselor {
                mode,
                model: transition.clone(),
                selection: config.counselor.selection,
                expected_turns: config.counselor.expected_turns,
            })
        };
        let mut models = BTreeMap::new();
        for (name, m) in &config.service.models {
            let backend = build_backend(&m.backend, &config.base_dir)?;
            models.insert(name.clone(), Model { backend, counselor: counselor(m.counselor_mode)? });
        }
        if models.is_empty() {
            let b = config.backends()?;
            models.insert("default".into(), Model { backend: b.supporter, counselor: counselor(config.engine.counselor_mode)? });
        }
        let mut state = Self::new(models, config.service.default_model.clone(), config.service.seed)?
            .with_pools(pools)
            .with_settings(config.role_settings()?)
            .with_taxonomy(config.taxonomy()?)
            .with_created_at(config.engine.created_at.clone());
        if let Some(p) = &config.service.session_log {
            state = state.with_log(&config.resolve(p))?;
        }
        Ok(state)
    }

    fn event(&self, event: &str, session: &str, detail: Value) {
        let Some(log) = &self.log else { return };
        let line = json!({"event": event, "session_id": session, "detail": detail});
        let mut w = log.lock().expect("log lock");
        if let Err(e) = writeln!(w, "{line}").and_then(|_| w.flush()) {
            log::error!("session log write failed: {e}");
        }
    }

    fn session(&self, id: &str) -> Result<Arc<AsyncMutex<Session>>, ApiError> {
        self.sessions
            .lock()
            .expect("session map lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("no session {id}")))
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self { status, message: message.into() }
    }

    fn bad(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message)
    }

    fn conflict(message: impl Into<String>) -> Self {
        Self::new(StatusCode::CONFLICT, message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({"error": self.message}))).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSession {
    #[serde(default)]
    pub scenario: Option<String>,
    #[serde(default)]
    pub problem_type: Option<String>,
    #[serde(default)]
    pub category: Option<Category>,
    #[serde(default)]
    pub arm: ArmKind,
    #[serde(default)]
    pub models: Vec<String>,
}

async fn create_session(State(state): State<Arc<AppState>>, Json(body): Json<CreateSession>) -> ApiResult<Response> {
    let names = match (body.arm, body.models.len()) {
        (ArmKind::Single, 0) => vec![state.default_model.clone()],
        (ArmKind::Single, 1) => body.models.clone(),
        (ArmKind::Ab, 2) => body.models.clone(),
        (ArmKind::Single, n) => return Err(ApiError::bad(format!("single arm takes one model, got {n}"))),
        (ArmKind::Ab, n) => return Err(ApiError::bad(format!("ab arm takes two models, got {n}"))),
    };
    if let Some(unknown) = names.iter().find(|n| !state.models.contains_key(*n)) {
        return Err(ApiError::bad(format!("unknown model {unknown:?}")));
    }
    let problem_type = match &body.problem_type {
        Some(name) => match state.taxonomy.find(name) {
            Some(pt) => pt.clone(),
            None => match body.category {
                Some(c) => ProblemType::new(c, name.clone()),
                None => return Err(ApiError::bad(format!("unknown problem type {name:?}; pass a category"))),
            },
        },
        None => ProblemType::new(body.category.unwrap_or(Category::EmotionalAndMentalHealth), UNSPECIFIED),
    };

    let (flip, seed, suffix) = {
        let mut rng = state.rng.lock().expect("rng lock");
        (rng.random_bool(0.5), rng.random::<u64>(), rng.random::<u32>())
    };
    let n = state.counter.fetch_add(1, Ordering::Relaxed);
    let id = format!("s{n:06}-{suffix:08x}");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let exemplar = match state.pools.pick_scenario_seed(&problem_type, &mut rng) {
        Ok(s) => s.dialogue.clone(),
        Err(_) => Dialogue::new("none", problem_type.clone(), ""),
    };
    let ordered: Vec<String> = if body.arm == ArmKind::Ab && flip { names.iter().rev().cloned().collect() } else { names };
    let labels: &[&'static str] = if body.arm == ArmKind::Ab { &["A", "B"] } else { &["single"] };
    let branches = labels
        .iter()
        .zip(&ordered)
        .map(|(label, model)| Branch { label, model: model.clone(), utterances: Vec::new() })
        .collect();
    let session = Session {
        id: id.clone(),
        kind: body.arm,
        problem_type,
        scenario: body.scenario.unwrap_or_default(),
        branches,
        pending: None,
        rating: None,
        exemplar,
        seed,
        rng,
    };
    let view = session.view();
    state.event("create", &id, json!({"arm": body.arm, "models": session.mapping()}));
    state.sessions.lock().expect("session map lock").insert(id, Arc::new(AsyncMutex::new(session)));
    Ok((StatusCode::CREATED, Json(view)).into_response())
}

async fn get_session(State(state): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> ApiResult<Json<Value>> {
    let session = state.session(&id)?;
    let s = session.lock().await;
    Ok(Json(s.view()))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PostMessage {
    pub text: String,
}

struct Job {
    label: &'static str,
    model: Model,
    history: Vec<Utterance>,
}

async fn post_message(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    Json(body): Json<PostMessage>,
) -> ApiResult<Json<Value>> {
    let text = body.text.trim();
    if text.is_empty() {
        return Err(ApiError::bad("empty message"));
    }
    if text.chars().count() > MAX_MESSAGE_CHARS {
        return Err(ApiError::bad(format!("message longer than {MAX_MESSAGE_CHARS} characters")));
    }
    let session = state.session(&id)?;
    let mut s = session.lock().await;
    if s.closed() {
        return Err(ApiError::conflict("session is closed"));
    }
    let seeker_text = match s.pending.take() {
        Some(p) => format!("{p} {text}"),
        None => text.to_string(),
    };
    let seeker = Utterance::seeker(seeker_text.clone());
    let jobs: Vec<Job> = s
        .branches
        .iter()
        .map(|b| {
            let mut history = b.utterances.clone();
            history.push(seeker.clone());
            Job { label: b.label, model: state.models[&b.model].clone(), history }
        })
        .collect();
    let settings = state.settings.clone();
    let exemplar = s.exemplar.clone();
    let mut rng = s.rng.clone();

    let outcome = tokio::task::spawn_blocking(move || {
        let mut replies = Vec::with_capacity(jobs.len());
        for job in &jobs {
            let decision = job.model.counselor.select(&job.history, &*job.model.backend, &settings, &mut rng)?;
            let reply = supporter_turn(decision.strategy, &job.history, &exemplar, &*job.model.backend, &settings)?;
            replies.push((job.label, reply));
        }
        Ok::<_, supportsim_core::Error>((replies, rng))
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, format!("worker failed: {e}")))?;

    match outcome {
        Ok((replies, rng)) => {
            s.rng = rng;
            let mut out = Vec::new();
            for (branch, (label, reply)) in s.branches.iter_mut().zip(replies) {
                branch.utterances.push(seeker.clone());
                out.push(json!({"label": label, "text": reply.text, "strategy": reply.strategy}));
                branch.utterances.push(reply);
            }
            state.event("message", &id, json!({"seeker": seeker_text, "replies": out}));
            Ok(Json(json!({"replies": out})))
        }
        Err(err) => {
            s.pending = Some(seeker_text.clone());
            state.event("backend_error", &id, json!({"seeker": seeker_text, "error": err.to_string()}));
            Err(ApiError::new(StatusCode::BAD_GATEWAY, format!("model call failed: {err}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AbChoice {
    #[serde(rename = "A wins")]
    AWins,
    #[serde(rename = "Tie")]
    Tie,
    #[serde(rename = "B wins")]
    BWins,
}

fn parse_single_rating(body: &Value) -> Result<Value, String> {
    let obj = body.as_object().ok_or("rating must be a JSON object")?;
    if let Some(k) = obj.keys().find(|k| !RATING_ASPECTS.contains(&k.as_str()) && *k != "comment") {
        return Err(format!("unknown rating field {k:?}"));
    }
    let mut out = Map::new();
    for aspect in RATING_ASPECTS {
        let v = obj.get(aspect).ok_or_else(|| format!("missing {aspect}"))?;
        match v.as_u64() {
            Some(score @ 1..=5) => out.insert(aspect.into(), json!(score)),
            _ => return Err(format!("{aspect} must be an integer 1-5")),
        };
    }
    if let Some(c) = obj.get("comment") {
        let c = c.as_str().ok_or("comment must be a string")?;
        out.insert("comment".into(), Value::String(c.into()));
    }
    Ok(Value::Object(out))
}

fn parse_ab_rating(body: &Value) -> Result<AbChoice, String> {
    let obj = body.as_object().ok_or("rating must be a JSON object")?;
    if let Some(k) = obj.keys().find(|k| *k != "ab_choice") {
        return Err(format!("unknown rating field {k:?}"));
    }
    let v = obj.get("ab_choice").ok_or("missing ab_choice")?;
    serde_json::from_value(v.clone()).map_err(|_| "ab_choice must be \"A wins\", \"Tie\" or \"B wins\"".to_string())
}

async fn post_rating(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    Json(body): Json<Value>,
) -> ApiResult<Json<Value>> {
    let session = state.session(&id)?;
    let mut s = session.lock().await;
    if s.closed() {
        return Err(ApiError::conflict("session already rated"));
    }
    if s.branches[0].utterances.is_empty() {
        return Err(ApiError::conflict("nothing to rate yet"));
    }
    let rating = match s.kind {
        ArmKind::Single => parse_single_rating(&body).map_err(ApiError::bad)?,
        ArmKind::Ab => {
            let choice = parse_ab_rating(&body).map_err(ApiError::bad)?;
            let winner = match choice {
                AbChoice::AWins => json!(s.branches[0].model),
                AbChoice::BWins => json!(s.branches[1].model),
                AbChoice::Tie => Value::Null,
            };
            json!({"ab_choice": choice, "winner_model": winner})
        }
    };
    s.rating = Some(rating.clone());
    let mapping = s.mapping();
    state.event("rating", &id, json!({"rating": rating, "mapping": mapping}));
    Ok(Json(json!({"stored": true, "unblinded_mapping": mapping})))
}

async fn export(State(state): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> ApiResult<Json<Dialogue>> {
    let session = state.session(&id)?;
    let s = session.lock().await;
    Ok(Json(s.export(&state.created_at)))
}

async fn strategies() -> Json<Vec<&'static str>> {
    Json(StrategyLabel::ALL.iter().map(|s| s.as_str()).collect())
}

async fn models(State(state): State<Arc<AppState>>) -> Json<Value> {
    Json(json!({"default": state.default_model, "models": state.models.keys().collect::<Vec<_>>()}))
}

async fn healthz() -> Json<Value> {
    Json(json!({"status": "ok"}))
}

fn cors(origins: &[String]) -> anyhow::Result<CorsLayer> {
    let layer = CorsLayer::new().allow_methods(Any).allow_headers(Any);
    if origins.iter().any(|o| o == "*") {
        return Ok(layer.allow_origin(Any));
    }
    let values = origins.iter().map(|o| HeaderValue::from_str(o)).collect::<Result<Vec<_>, _>>()?;
    Ok(layer.allow_origin(AllowOrigin::list(values)))
}

pub fn router(state: Arc<AppState>, origins: &[String], ui_dir: Option<&Path>) -> anyhow::Result<Router> {
    let mut app = Router::new()
        .route("/healthz", get(healthz))
        .route("/strategies", get(strategies))
        .route("/models", get(models))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/messages", post(post_message))
        .route("/sessions/{id}/rating", post(post_rating))
        .route("/sessions/{id}/export", get(export))
        .with_state(state);
    if let Some(dir) = ui_dir {
        if dir.is_dir() {
            app = app.fallback_service(ServeDir::new(dir));
        } else {
            log::warn!("ui_dir {} does not exist; not serving static files", dir.display());
        }
    }
    Ok(app.layer(cors(origins)?))
}

pub fn router_from_config(config: &Config) -> anyhow::Result<Router> {
    let state = Arc::new(AppState::from_config(config)?);
    let ui = config.service.ui_dir.as_ref().map(|p| config.resolve(p));
    router(state, &config.service.cors_origins, ui.as_deref())
}

pub async fn serve(config: &Config, port: u16) -> anyhow::Result<()> {
    let app = router_from_config(config)?;
    let addr = SocketAddr::from(([127, 0, 0, 1], port));
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

/// Statistical counselor with a given transition model, for callers that
/// assemble models by hand.
pub fn statistical_model(backend: SharedBackend, transition: supportsim_core::counselor::TransitionModel, expected_turns: usize) -> Model {
    Model { backend, counselor: Counselor::statistical(transition, expected_turns).with_selection(Selection::Argmax) }
}

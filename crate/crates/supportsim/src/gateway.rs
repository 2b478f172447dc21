//! Chat backends: an OpenAI-compatible HTTP client and a scripted replay
//! backend fed from a fixture file.

use std::path::{Path, PathBuf};
use std::sync::{Arc, Condvar, Mutex};
use std::time::Duration;

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use supportsim_core::backend::{BackendError, ChatBackend, ChatRequest, ChatRole, FixtureEntry, ReplayQueue, RoleTag};

use crate::io;

pub type SharedBackend = Arc<dyn ChatBackend + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Http,
    Scripted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendConfig {
    pub kind: BackendKind,
    #[serde(default)]
    pub endpoint_url: Option<String>,
    #[serde(default)]
    pub model_name: Option<String>,
    /// Name of the environment variable holding the API key.
    #[serde(default = "default_key_var")]
    pub api_key_env_var: String,
    #[serde(default = "default_timeout")]
    pub timeout_secs: f64,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    #[serde(default = "default_concurrency")]
    pub max_concurrent: usize,
    #[serde(default)]
    pub fixture_path: Option<PathBuf>,
    /// First backoff ceiling; doubles per retry, full jitter.
    #[serde(default = "default_backoff")]
    pub backoff_base_ms: u64,
}

fn default_key_var() -> String {
    "OPENAI_API_KEY".into()
}
fn default_timeout() -> f64 {
    60.0
}
fn default_retries() -> u32 {
    3
}
fn default_concurrency() -> usize {
    4
}
fn default_backoff() -> u64 {
    500
}

impl BackendConfig {
    pub fn scripted(fixture_path: impl Into<PathBuf>) -> Self {
        Self {
            kind: BackendKind::Scripted,
            endpoint_url: None,
            model_name: None,
            api_key_env_var: default_key_var(),
            timeout_secs: default_timeout(),
            max_retries: default_retries(),
            max_concurrent: default_concurrency(),
            fixture_path: Some(fixture_path.into()),
            backoff_base_ms: default_backoff(),
        }
    }

    pub fn http(endpoint_url: impl Into<String>, model_name: impl Into<String>) -> Self {
        Self {
            kind: BackendKind::Http,
            endpoint_url: Some(endpoint_url.into()),
            model_name: Some(model_name.into()),
            fixture_path: None,
            ..Self::scripted("")
        }
    }

    pub fn validate(&self) -> Result<(), BackendError> {
        let bad = |m: &str| Err(BackendError::Config(m.into()));
        match self.kind {
            BackendKind::Http => {
                if self.endpoint_url.as_deref().is_none_or(str::is_empty) {
                    return bad("http backend needs endpoint_url");
                }
                if self.model_name.as_deref().is_none_or(str::is_empty) {
                    return bad("http backend needs model_name");
                }
            }
            BackendKind::Scripted => {
                if self.fixture_path.as_deref().is_none_or(|p| p.as_os_str().is_empty()) {
                    return bad("scripted backend needs fixture_path");
                }
            }
        }
        if self.max_concurrent == 0 {
            return bad("max_concurrent must be positive");
        }
        if !(self.timeout_secs > 0.0) {
            return bad("timeout_secs must be positive");
        }
        Ok(())
    }
}

/// Builds a backend; relative fixture paths resolve against `base_dir`.
pub fn build_backend(config: &BackendConfig, base_dir: &Path) -> Result<SharedBackend, BackendError> {
    config.validate()?;
    match config.kind {
        BackendKind::Http => Ok(Arc::new(HttpBackend::new(config)?)),
        BackendKind::Scripted => {
            let path = base_dir.join(config.fixture_path.as_ref().expect("validated"));
            Ok(Arc::new(ScriptedBackend::from_path(&path)?))
        }
    }
}

/// Replays a fixture; safe to share across threads, consumption order is
/// the order calls arrive in.
#[derive(Debug, Default)]
pub struct ScriptedBackend {
    queue: Mutex<ReplayQueue>,
}

impl ScriptedBackend {
    pub fn new(entries: impl IntoIterator<Item = FixtureEntry>) -> Self {
        Self { queue: Mutex::new(ReplayQueue::new(entries)) }
    }

    pub fn from_path(path: &Path) -> Result<Self, BackendError> {
        let entries = io::load_fixture(path).map_err(|e| BackendError::Config(e.to_string()))?;
        Ok(Self::new(entries))
    }

    pub fn remaining(&self, role: RoleTag) -> usize {
        self.queue.lock().expect("fixture lock").remaining(role)
    }
}

impl ChatBackend for ScriptedBackend {
    fn complete(&self, role: RoleTag, request: &ChatRequest) -> Result<String, BackendError> {
        request.validate()?;
        self.queue.lock().expect("fixture lock").next(role)
    }
}

/// Counting semaphore bounding in-flight requests.
#[derive(Debug)]
struct Limiter {
    free: Mutex<usize>,
    cv: Condvar,
}

struct Permit<'a>(&'a Limiter);

impl Limiter {
    fn new(n: usize) -> Self {
        Self { free: Mutex::new(n), cv: Condvar::new() }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut free = self.free.lock().expect("limiter lock");
        while *free == 0 {
            free = self.cv.wait(free).expect("limiter lock");
        }
        *free -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().expect("limiter lock") += 1;
        self.0.cv.notify_one();
    }
}

enum Failure {
    Transient(String),
    Fatal(BackendError),
}

/// OpenAI-style `POST {endpoint_url}` chat completions.
pub struct HttpBackend {
    agent: ureq::Agent,
    url: String,
    model: String,
    api_key: Option<String>,
    max_retries: u32,
    backoff_base: Duration,
    limiter: Limiter,
}

impl std::fmt::Debug for HttpBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HttpBackend").field("url", &self.url).field("model", &self.model).finish_non_exhaustive()
    }
}

impl HttpBackend {
    pub fn new(config: &BackendConfig) -> Result<Self, BackendError> {
        config.validate()?;
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs_f64(config.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        let api_key = std::env::var(&config.api_key_env_var).ok().filter(|k| !k.is_empty());
        if api_key.is_none() {
            log::debug!("{} not set; sending requests without a key", config.api_key_env_var);
        }
        Ok(Self {
            agent,
            url: config.endpoint_url.clone().expect("validated"),
            model: config.model_name.clone().expect("validated"),
            api_key,
            max_retries: config.max_retries,
            backoff_base: Duration::from_millis(config.backoff_base_ms),
            limiter: Limiter::new(config.max_concurrent),
        })
    }

    fn body(&self, request: &ChatRequest) -> Value {
        let mut messages = vec![json!({"role": "system", "content": request.system_prompt})];
        for m in &request.messages {
            let role = match m.role {
                ChatRole::User => "user",
                ChatRole::Assistant => "assistant",
            };
            messages.push(json!({"role": role, "content": m.text}));
        }
        json!({
            "model": self.model,
            "messages": messages,
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        })
    }

    fn attempt(&self, body: &Value) -> Result<String, Failure> {
        let _permit = self.limiter.acquire();
        let mut req = self.agent.post(&self.url).header("Content-Type", "application/json");
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = match req.send_json(body) {
            Ok(r) => r,
            Err(ureq::Error::Timeout(t)) => return Err(Failure::Transient(format!("timeout ({t})"))),
            Err(ureq::Error::Io(e)) => return Err(Failure::Transient(format!("io: {e}"))),
            Err(ureq::Error::ConnectionFailed) => return Err(Failure::Transient("connection failed".into())),
            Err(e) => return Err(Failure::Fatal(BackendError::Transport(e.to_string()))),
        };
        let status = resp.status().as_u16();
        if status == 429 || status >= 500 {
            return Err(Failure::Transient(format!("HTTP {status}")));
        }
        if !(200..300).contains(&status) {
            let text = resp.body_mut().read_to_string().unwrap_or_default();
            return Err(Failure::Fatal(BackendError::Transport(format!("HTTP {status}: {}", text.chars().take(200).collect::<String>()))));
        }
        let value: Value = resp
            .body_mut()
            .read_json()
            .map_err(|e| Failure::Fatal(BackendError::Protocol(format!("bad JSON body: {e}"))))?;
        let text = value
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .ok_or_else(|| Failure::Fatal(BackendError::Protocol("no choices[0].message.content".into())))?;
        if text.trim().is_empty() {
            return Err(Failure::Fatal(BackendError::Protocol("empty completion".into())));
        }
        Ok(text.to_string())
    }

    /// Full-jitter delay before retry `n` (0-based): uniform in
    /// `[0, base·2^n]`.
    fn backoff(&self, n: u32) -> Duration {
        let cap = self.backoff_base.saturating_mul(1u32.checked_shl(n).unwrap_or(u32::MAX));
        let nanos = cap.as_nanos().min(u64::MAX as u128) as u64;
        Duration::from_nanos(if nanos == 0 { 0 } else { rand::rng().random_range(0..=nanos) })
    }
}

impl ChatBackend for HttpBackend {
    fn complete(&self, role: RoleTag, request: &ChatRequest) -> Result<String, BackendError> {
        request.validate()?;
        let body = self.body(request);
        let mut last = String::new();
        for attempt in 0..=self.max_retries {
            match self.attempt(&body) {
                Ok(text) => return Ok(text),
                Err(Failure::Fatal(e)) => return Err(e),
                Err(Failure::Transient(why)) => {
                    log::warn!("{role} request attempt {} failed: {why}", attempt + 1);
                    last = why;
                    if attempt < self.max_retries {
                        std::thread::sleep(self.backoff(attempt));
                    }
                }
            }
        }
        Err(BackendError::Transport(format!("gave up after {} retries: {last}", self.max_retries)))
    }
}

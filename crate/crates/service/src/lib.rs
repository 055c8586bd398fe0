//! Stateless JSON-over-HTTP front end for reward scoring, group advantages
//! and layout metrics.
//!
//! Routes: `POST /v1/reward`, `POST /v1/metrics`, `GET /v1/health`.

use std::future::Future;
use std::io::Write as _;
use std::path::PathBuf;
use std::sync::{Arc, RwLock};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use axum::body::Bytes;
use axum::extract::rejection::BytesRejection;
use axum::extract::{DefaultBodyLimit, Request, State};
use axum::http::{header, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::net::TcpListener;
use tokio::sync::Semaphore;

use posterlay::backends::{evaluate_record, RolloutGroup};
use posterlay::grpo::{AdvantageMode, GrpoConfig};
use posterlay::metrics::{self, MetricReport};
use posterlay::{LayoutDocument, RewardBreakdown, RewardConfig, RewardWeights};

pub const BIND_ENV: &str = "POSTERLAY_BIND";
pub const PORT_ENV: &str = "POSTERLAY_PORT";

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("invalid service configuration: {0}")]
    Config(String),
    #[error("reward config {path}: {message}")]
    RewardConfig { path: PathBuf, message: String },
    #[error("cannot bind {addr}: {source}")]
    Bind { addr: String, source: std::io::Error },
    #[error("server error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub bind: String,
    pub port: u16,
    /// Evaluations running at once; further requests wait.
    pub max_concurrent: usize,
    pub reward_config_path: Option<PathBuf>,
    pub max_body_bytes: usize,
    pub max_candidates: usize,
    /// One NDJSON line per request on stderr.
    pub request_log: bool,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            bind: "127.0.0.1".into(),
            port: 8080,
            max_concurrent: std::thread::available_parallelism().map_or(4, |n| n.get()),
            reward_config_path: None,
            max_body_bytes: 8 << 20,
            max_candidates: 256,
            request_log: true,
        }
    }
}

impl ServiceConfig {
    pub fn validate(&self) -> Result<(), ServiceError> {
        if self.max_concurrent == 0 || self.max_body_bytes == 0 || self.max_candidates == 0 {
            return Err(ServiceError::Config("limits must be positive".into()));
        }
        Ok(())
    }

    /// `POSTERLAY_BIND` and `POSTERLAY_PORT` take precedence over the file and
    /// flags.
    pub fn with_env_overrides(mut self) -> Result<Self, ServiceError> {
        if let Ok(bind) = std::env::var(BIND_ENV) {
            self.bind = bind;
        }
        if let Ok(port) = std::env::var(PORT_ENV) {
            self.port = port.parse().map_err(|_| ServiceError::Config(format!("{PORT_ENV}={port} is not a port")))?;
        }
        Ok(self)
    }

    pub fn addr(&self) -> String {
        format!("{}:{}", self.bind, self.port)
    }
}

/// Shared, read-mostly state. The reward config is swapped wholesale on
/// reload; requests in flight keep the snapshot they started with.
pub struct AppState {
    config: ServiceConfig,
    rewards: RwLock<Arc<RewardConfig>>,
    permits: Arc<Semaphore>,
}

fn load_reward_config(path: Option<&PathBuf>) -> Result<RewardConfig, ServiceError> {
    let Some(path) = path else { return Ok(RewardConfig::default()) };
    let text = std::fs::read_to_string(path)
        .map_err(|e| ServiceError::RewardConfig { path: path.clone(), message: e.to_string() })?;
    RewardConfig::from_json(&text).map_err(|message| ServiceError::RewardConfig { path: path.clone(), message })
}

impl AppState {
    pub fn new(config: ServiceConfig) -> Result<Arc<Self>, ServiceError> {
        config.validate()?;
        let rewards = load_reward_config(config.reward_config_path.as_ref())?;
        Ok(Self::with_rewards(config, rewards))
    }

    pub fn with_rewards(config: ServiceConfig, rewards: RewardConfig) -> Arc<Self> {
        let permits = Arc::new(Semaphore::new(config.max_concurrent));
        Arc::new(Self { config, rewards: RwLock::new(Arc::new(rewards)), permits })
    }

    pub fn reward_config(&self) -> Arc<RewardConfig> {
        self.rewards.read().expect("reward config lock").clone()
    }

    /// Re-read the reward config file; returns the new fingerprint. On error
    /// the previous config stays active.
    pub fn reload(&self) -> Result<String, ServiceError> {
        let fresh = load_reward_config(self.config.reward_config_path.as_ref())?;
        let hash = fresh.fingerprint();
        *self.rewards.write().expect("reward config lock") = Arc::new(fresh);
        Ok(hash)
    }

    /// Swap in a config directly (used where no file backs the service).
    pub fn replace_rewards(&self, rewards: RewardConfig) -> String {
        let hash = rewards.fingerprint();
        *self.rewards.write().expect("reward config lock") = Arc::new(rewards);
        hash
    }
}

// ---------------------------------------------------------------------------
// Wire types
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardRequest {
    pub canvas: LayoutDocument,
    #[serde(default)]
    pub reference: Option<LayoutDocument>,
    pub candidates: Vec<String>,
    #[serde(default)]
    pub weights: Option<RewardWeights>,
    #[serde(default)]
    pub advantage_mode: Option<AdvantageMode>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardResponse {
    pub breakdowns: Vec<RewardBreakdown>,
    pub rewards: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub advantages: Option<Vec<f64>>,
    /// Fingerprint of the reward config actually applied (including any
    /// per-request weights).
    pub reward_config_hash: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsItem {
    pub canvas: LayoutDocument,
    pub layout: LayoutDocument,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsRequest {
    pub items: Vec<MetricsItem>,
    #[serde(default)]
    pub per_layout: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub version: String,
    pub reward_config_hash: String,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
    path: Option<String>,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self { status, message: message.into(), path: None }
    }

    fn at(status: StatusCode, path: impl Into<String>, message: impl ToString) -> Self {
        Self { status, message: message.to_string(), path: Some(path.into()) }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = json!({ "error": self.message });
        if let Some(path) = self.path {
            body["path"] = path.into();
        }
        (self.status, axum::Json(body)).into_response()
    }
}

fn parse_body<T: DeserializeOwned>(body: Result<Bytes, BytesRejection>) -> Result<T, ApiError> {
    let bytes = body.map_err(|r| ApiError::new(r.status(), r.body_text()))?;
    let de = &mut serde_json::Deserializer::from_slice(&bytes);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        ApiError::at(StatusCode::BAD_REQUEST, path, e.into_inner())
    })
}

fn json_bytes(value: &impl Serialize) -> Response {
    let bytes = serde_json::to_vec(value).expect("responses always serialize");
    ([(header::CONTENT_TYPE, "application/json")], bytes).into_response()
}

// ---------------------------------------------------------------------------
// Handlers
// ---------------------------------------------------------------------------

/// Pure request evaluation; identical requests give identical responses.
pub fn evaluate_reward(req: &RewardRequest, base: &RewardConfig) -> Result<RewardResponse, ApiError> {
    let bad = StatusCode::BAD_REQUEST;
    let canvas = req.canvas.canvas().map_err(|e| ApiError::at(bad, "canvas", e))?;
    let reference = match &req.reference {
        Some(doc) if !doc.elements.is_empty() => Some(doc.layout().map_err(|e| ApiError::at(bad, "reference", e))?),
        _ => None,
    };
    let mut rewards = base.clone();
    if let Some(w) = req.weights {
        w.validate().map_err(|e| ApiError::at(bad, "weights", e))?;
        rewards.weights = w;
    }
    let grpo = GrpoConfig::with_mode(req.advantage_mode.unwrap_or_default());
    let group = RolloutGroup::from_raw(canvas.id.clone(), req.candidates.iter().cloned());
    let record = evaluate_record(&group, &canvas, reference.as_ref(), &rewards, &grpo)
        .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()))?;
    Ok(RewardResponse {
        breakdowns: record.breakdowns,
        rewards: record.rewards,
        advantages: record.advantages,
        reward_config_hash: rewards.fingerprint(),
    })
}

pub fn evaluate_metrics(req: &MetricsRequest) -> Result<MetricReport, ApiError> {
    let bad = StatusCode::BAD_REQUEST;
    let items = req
        .items
        .iter()
        .enumerate()
        .map(|(i, item)| {
            let canvas = item.canvas.canvas().map_err(|e| ApiError::at(bad, format!("items[{i}].canvas"), e))?;
            let layout = item.layout.layout().map_err(|e| ApiError::at(bad, format!("items[{i}].layout"), e))?;
            Ok((layout, canvas))
        })
        .collect::<Result<Vec<_>, ApiError>>()?;
    let mut report = metrics::report(&items).map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()))?;
    if !req.per_layout {
        report.per_layout = None;
    }
    Ok(report)
}

/// Run `work` on the blocking pool once a concurrency permit is free.
async fn bounded<T: Send + 'static>(state: &AppState, work: impl FnOnce() -> T + Send + 'static) -> Result<T, ApiError> {
    let _permit = state.permits.clone().acquire_owned().await.expect("semaphore never closes");
    tokio::task::spawn_blocking(work)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, format!("evaluation task failed: {e}")))
}

async fn reward(State(state): State<Arc<AppState>>, body: Result<Bytes, BytesRejection>) -> Result<Response, ApiError> {
    let req: RewardRequest = parse_body(body)?;
    if req.candidates.is_empty() {
        return Err(ApiError::at(StatusCode::UNPROCESSABLE_ENTITY, "candidates", "at least one candidate is required"));
    }
    let limit = state.config.max_candidates;
    if req.candidates.len() > limit {
        return Err(ApiError::at(
            StatusCode::PAYLOAD_TOO_LARGE,
            "candidates",
            format!("{} candidates exceed the limit of {limit}", req.candidates.len()),
        ));
    }
    let base = state.reward_config();
    let resp = bounded(&state, move || evaluate_reward(&req, &base)).await??;
    Ok(json_bytes(&resp))
}

async fn metrics_route(State(state): State<Arc<AppState>>, body: Result<Bytes, BytesRejection>) -> Result<Response, ApiError> {
    let req: MetricsRequest = parse_body(body)?;
    if req.items.is_empty() {
        return Err(ApiError::at(StatusCode::UNPROCESSABLE_ENTITY, "items", "at least one item is required"));
    }
    let report = bounded(&state, move || evaluate_metrics(&req)).await??;
    Ok(json_bytes(&report))
}

async fn health(State(state): State<Arc<AppState>>) -> Response {
    json_bytes(&Health {
        status: "ok".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        reward_config_hash: state.reward_config().fingerprint(),
    })
}

async fn log_request(State(state): State<Arc<AppState>>, req: Request, next: Next) -> Response {
    if !state.config.request_log {
        return next.run(req).await;
    }
    let (method, path) = (req.method().to_string(), req.uri().path().to_string());
    let started = Instant::now();
    let resp = next.run(req).await;
    let line = json!({
        "ts_ms": SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as u64),
        "method": method,
        "path": path,
        "status": resp.status().as_u16(),
        "latency_ms": started.elapsed().as_secs_f64() * 1e3,
    });
    let _ = writeln!(std::io::stderr().lock(), "{line}");
    resp
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/v1/reward", post(reward))
        .route("/v1/metrics", post(metrics_route))
        .route("/v1/health", get(health))
        .fallback(|| async { ApiError::new(StatusCode::NOT_FOUND, "no such route") })
        .layer(DefaultBodyLimit::max(state.config.max_body_bytes))
        .layer(middleware::from_fn_with_state(state.clone(), log_request))
        .with_state(state)
}

pub async fn bind(config: &ServiceConfig) -> Result<TcpListener, ServiceError> {
    let addr = config.addr();
    TcpListener::bind(&addr).await.map_err(|source| ServiceError::Bind { addr, source })
}

/// Serve until `shutdown` resolves, then drain in-flight requests.
pub async fn serve(listener: TcpListener, state: Arc<AppState>, shutdown: impl Future<Output = ()> + Send + 'static) -> Result<(), ServiceError> {
    axum::serve(listener, router(state)).with_graceful_shutdown(shutdown).await?;
    Ok(())
}

/// Resolves on Ctrl-C or SIGTERM. On Unix, SIGHUP reloads the reward config
/// in the meantime.
pub async fn shutdown_signal(state: Arc<AppState>) {
    #[cfg(unix)]
    {
        use tokio::signal::unix::{signal, SignalKind};
        let mut term = signal(SignalKind::terminate()).expect("install SIGTERM handler");
        let mut hup = signal(SignalKind::hangup()).expect("install SIGHUP handler");
        loop {
            tokio::select! {
                _ = tokio::signal::ctrl_c() => break,
                _ = term.recv() => break,
                _ = hup.recv() => match state.reload() {
                    Ok(hash) => log::info!("reward config reloaded, hash {hash}"),
                    Err(e) => log::error!("reload failed, keeping previous config: {e}"),
                },
            }
        }
    }
    #[cfg(not(unix))]
    {
        let _ = state;
        let _ = tokio::signal::ctrl_c().await;
    }
}

/// Bind, serve and stop on a signal.
pub async fn run(config: ServiceConfig) -> Result<(), ServiceError> {
    let state = AppState::new(config.clone())?;
    let listener = bind(&config).await?;
    log::info!("listening on {}", listener.local_addr()?);
    serve(listener, state.clone(), shutdown_signal(state)).await
}

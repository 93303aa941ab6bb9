//! HTTP/JSON protocol for interactive training sessions.
//!
//! Each session lives on its own worker thread, which owns the
//! [`TrainingSession`] and applies commands one at a time. After every
//! command or training chunk the worker publishes an immutable snapshot;
//! state and grid requests read that snapshot and never wait on training.

use std::collections::HashMap;
use std::future::Future;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::mpsc::{self, TryRecvError};
use std::sync::{Arc, Mutex, RwLock};
use std::thread;
use std::time::{Duration, Instant};

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use nilnet::compiler::{compile_with, parse_expression, preset_expression, CompileOptions};
use nilnet::data::{generate_dataset, split, DatasetConfig, DatasetKind};
use nilnet::network::{Activation, Network, DEFAULT_INPUT_SCALE};
use nilnet::trainer::{evaluate_grid, EpochMetrics, SessionStatus, TrainConfig, TrainingSession};
use nilnet::TrainError;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::sync::oneshot;
use tower_http::services::ServeDir;

/// Epoch metrics included in a state response.
pub const HISTORY_TAIL: usize = 100;
pub const DEFAULT_GRID_RESOLUTION: usize = 51;
pub const MAX_GRID_RESOLUTION: usize = 257;

#[derive(Debug, Clone)]
pub struct ServerConfig {
    /// Sessions untouched for this long are dropped.
    pub session_ttl: Duration,
    /// UI bundle served for paths outside the protocol.
    pub static_dir: Option<PathBuf>,
    /// Pause between training chunks of a running session.
    pub pace: Duration,
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self {
            session_ttl: Duration::from_secs(900),
            static_dir: None,
            pace: Duration::from_millis(10),
        }
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
    step: Option<u64>,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
            step: None,
        }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message)
    }

    fn unknown_session(id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, format!("unknown session {id}"))
    }

    fn from_train(e: TrainError, step: u64) -> Self {
        let status = match e {
            TrainError::InvalidTransition { .. } => StatusCode::CONFLICT,
            TrainError::Config(_) | TrainError::EmptyData => StatusCode::BAD_REQUEST,
            TrainError::Diverged { .. } | TrainError::Network(_) => StatusCode::UNPROCESSABLE_ENTITY,
        };
        Self {
            status,
            message: e.to_string(),
            step: Some(step),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = json!({ "error": self.message });
        if let Some(step) = self.step {
            body["step"] = json!(step);
        }
        (self.status, Json(body)).into_response()
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        Self::bad_request(r.body_text())
    }
}

impl From<QueryRejection> for ApiError {
    fn from(r: QueryRejection) -> Self {
        Self::bad_request(r.body_text())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct UnitView {
    pub label: String,
    pub detail: String,
    pub weights: Vec<f64>,
    pub bias: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LayerView {
    pub index: usize,
    pub label: Option<String>,
    pub frozen: bool,
    pub activation: Activation,
    pub units: Vec<UnitView>,
}

fn layer_views(net: &Network) -> Vec<LayerView> {
    net.layers()
        .iter()
        .enumerate()
        .map(|(index, l)| LayerView {
            index,
            label: l.label.clone(),
            frozen: l.frozen,
            activation: l.activation,
            units: l
                .weights
                .iter()
                .zip(&l.bias)
                .enumerate()
                .map(|(u, (w, b))| {
                    let info = l.units.get(u);
                    UnitView {
                        label: info.map(|i| i.label.clone()).unwrap_or_default(),
                        detail: info.map(|i| i.detail.clone()).unwrap_or_default(),
                        weights: w.clone(),
                        bias: *b,
                    }
                })
                .collect(),
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct StateView {
    pub id: String,
    pub status: &'static str,
    pub step: u64,
    pub epoch: usize,
    pub total_steps: u64,
    pub batches_per_epoch: usize,
    pub history_len: usize,
    /// The last [`HISTORY_TAIL`] epochs.
    pub history: Vec<EpochMetrics>,
    pub error: Option<String>,
    pub expression: String,
    pub dataset: DatasetConfig,
    pub config: TrainConfig,
    pub layers: Vec<LayerView>,
}

struct Snapshot {
    state: StateView,
    network: Arc<Network>,
}

enum Command {
    Start,
    Pause,
    Step(u64),
    Reset,
}

impl Command {
    fn parse(text: &str, steps: Option<u64>) -> Result<Self, ApiError> {
        let mut words = text.split_whitespace();
        let verb = words.next().unwrap_or("").to_ascii_lowercase();
        let arg = words.next();
        if words.next().is_some() {
            return Err(ApiError::bad_request(format!("malformed command `{text}`")));
        }
        let no_arg = |c: Command| match arg {
            None => Ok(c),
            Some(_) => Err(ApiError::bad_request(format!("`{verb}` takes no argument"))),
        };
        match verb.as_str() {
            "start" => no_arg(Command::Start),
            "pause" => no_arg(Command::Pause),
            "reset" => no_arg(Command::Reset),
            "step" => {
                let n = match (arg, steps) {
                    (Some(a), _) => a
                        .parse::<u64>()
                        .map_err(|_| ApiError::bad_request(format!("step count `{a}` is not a whole number")))?,
                    (None, Some(n)) => n,
                    (None, None) => 1,
                };
                if n == 0 {
                    return Err(ApiError::bad_request("step count must be positive"));
                }
                Ok(Command::Step(n))
            }
            _ => Err(ApiError::bad_request(format!(
                "unknown command `{text}`; expected start, pause, step N or reset"
            ))),
        }
    }
}

struct Job {
    command: Command,
    reply: oneshot::Sender<Result<StateView, ApiError>>,
}

struct SessionHandle {
    jobs: mpsc::Sender<Job>,
    snapshot: Arc<RwLock<Arc<Snapshot>>>,
    last_seen: Mutex<Instant>,
}

impl SessionHandle {
    fn snapshot(&self) -> Arc<Snapshot> {
        self.snapshot.read().expect("snapshot lock poisoned").clone()
    }
}

struct Worker {
    id: String,
    session: TrainingSession,
    expression: String,
    dataset: DatasetConfig,
    error: Option<String>,
    published: Arc<RwLock<Arc<Snapshot>>>,
    pace: Duration,
}

impl Worker {
    fn view(&self) -> StateView {
        let s = &self.session;
        let history = s.history();
        StateView {
            id: self.id.clone(),
            status: s.status().as_str(),
            step: s.step_count(),
            epoch: s.epoch(),
            total_steps: s.total_steps(),
            batches_per_epoch: s.batches_per_epoch(),
            history_len: history.len(),
            history: history[history.len().saturating_sub(HISTORY_TAIL)..].to_vec(),
            error: self.error.clone(),
            expression: self.expression.clone(),
            dataset: self.dataset,
            config: *s.config(),
            layers: layer_views(s.network()),
        }
    }

    fn snapshot(&self) -> Arc<Snapshot> {
        Arc::new(Snapshot {
            state: self.view(),
            network: Arc::new(self.session.network().clone()),
        })
    }

    fn publish(&self) -> StateView {
        let snap = self.snapshot();
        let state = snap.state.clone();
        *self.published.write().expect("snapshot lock poisoned") = snap;
        state
    }

    fn apply(&mut self, command: Command) -> Result<StateView, ApiError> {
        let result = match command {
            Command::Start => self.session.start(),
            Command::Pause => self.session.pause(),
            Command::Step(n) => self.session.step(n).map(drop),
            Command::Reset => {
                self.session.reset();
                self.error = None;
                Ok(())
            }
        };
        let state = self.publish();
        result
            .map(|()| state)
            .map_err(|e| ApiError::from_train(e, self.session.step_count()))
    }

    fn run(mut self, jobs: mpsc::Receiver<Job>) {
        loop {
            let job = if self.session.status() == SessionStatus::Running {
                match jobs.try_recv() {
                    Ok(job) => Some(job),
                    Err(TryRecvError::Empty) => None,
                    Err(TryRecvError::Disconnected) => return,
                }
            } else {
                match jobs.recv() {
                    Ok(job) => Some(job),
                    Err(_) => return,
                }
            };
            match job {
                Some(Job { command, reply }) => {
                    let _ = reply.send(self.apply(command));
                }
                None => {
                    let chunk = self.session.batches_per_epoch() as u64;
                    if let Err(e) = self.session.tick(chunk) {
                        self.error = Some(e.to_string());
                        let _ = self.session.pause();
                    }
                    self.publish();
                    if !self.pace.is_zero() {
                        thread::sleep(self.pace);
                    }
                }
            }
        }
    }
}

#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

struct Inner {
    sessions: Mutex<HashMap<String, Arc<SessionHandle>>>,
    next_id: AtomicU64,
    config: ServerConfig,
}

impl AppState {
    pub fn new(config: ServerConfig) -> Self {
        Self {
            inner: Arc::new(Inner {
                sessions: Mutex::new(HashMap::new()),
                next_id: AtomicU64::new(1),
                config,
            }),
        }
    }

    fn session(&self, id: &str) -> Result<Arc<SessionHandle>, ApiError> {
        let sessions = self.inner.sessions.lock().expect("session table poisoned");
        let handle = sessions.get(id).cloned().ok_or_else(|| ApiError::unknown_session(id))?;
        *handle.last_seen.lock().expect("clock poisoned") = Instant::now();
        Ok(handle)
    }

    pub fn session_count(&self) -> usize {
        self.inner.sessions.lock().expect("session table poisoned").len()
    }

    /// Drops sessions idle for longer than the configured time to live.
    pub fn expire_idle(&self) {
        let ttl = self.inner.config.session_ttl;
        self.inner
            .sessions
            .lock()
            .expect("session table poisoned")
            .retain(|_, h| h.last_seen.lock().expect("clock poisoned").elapsed() <= ttl);
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    /// Learnable weights drawn uniformly from [-1, 1] with the training seed.
    #[default]
    Random,
    /// Keep the compiled weights.
    Compiled,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSession {
    #[serde(default = "default_dataset")]
    pub dataset: DatasetConfig,
    /// Defaults to the preset expression of the dataset.
    #[serde(default)]
    pub expression: Option<String>,
    #[serde(default)]
    pub init: Init,
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
    #[serde(default)]
    pub config: TrainConfig,
    #[serde(default = "default_input_scale")]
    pub input_scale: f64,
}

fn default_dataset() -> DatasetConfig {
    DatasetConfig::new(DatasetKind::XorQuadrants, 500, 0.05, 0)
}

fn default_train_fraction() -> f64 {
    0.5
}

fn default_input_scale() -> f64 {
    DEFAULT_INPUT_SCALE
}

#[derive(Debug, Deserialize)]
pub struct CommandBody {
    pub command: String,
    #[serde(default)]
    pub steps: Option<u64>,
}

#[derive(Debug, Deserialize)]
pub struct GridQuery {
    pub resolution: Option<usize>,
}

async fn datasets() -> Json<Value> {
    let list: Vec<Value> = DatasetKind::NAMES
        .iter()
        .map(|name| {
            let kind = DatasetKind::from_name(name).expect("listed names resolve");
            let mut entry = serde_json::to_value(default_dataset_for(kind)).expect("dataset configs serialize");
            entry["expression"] = json!(preset_expression(kind, DEFAULT_INPUT_SCALE));
            entry
        })
        .collect();
    Json(json!({
        "datasets": list,
        "defaults": {
            "train_fraction": default_train_fraction(),
            "input_scale": DEFAULT_INPUT_SCALE,
            "config": TrainConfig::default(),
        },
    }))
}

fn default_dataset_for(kind: DatasetKind) -> DatasetConfig {
    DatasetConfig {
        kind,
        ..default_dataset()
    }
}

fn build_session(req: &CreateSession) -> Result<(TrainingSession, String), ApiError> {
    let bad = |e: &dyn std::fmt::Display| ApiError::bad_request(e.to_string());
    if !(req.input_scale.is_finite() && req.input_scale > 0.0) {
        return Err(ApiError::bad_request("input_scale must be positive"));
    }
    let expression = req
        .expression
        .clone()
        .unwrap_or_else(|| preset_expression(req.dataset.kind, req.input_scale));
    let expr = parse_expression(&expression).map_err(|e| bad(&e))?;
    let opts = CompileOptions {
        input_scale: req.input_scale,
        ..CompileOptions::default()
    };
    let mut net = Network::assemble(compile_with(&expr, &opts).map_err(|e| bad(&e))?).map_err(|e| bad(&e))?;
    if req.init == Init::Random {
        net.randomize_learnable(&mut ChaCha8Rng::seed_from_u64(req.config.seed));
    }
    let points = generate_dataset(&req.dataset).map_err(|e| bad(&e))?;
    let (train, test) = split(&points, req.train_fraction, req.dataset.seed).map_err(|e| bad(&e))?;
    let session = TrainingSession::new(net, train, test, req.config).map_err(|e| bad(&e))?;
    Ok((session, expression))
}

async fn create_session(
    State(app): State<AppState>,
    body: Result<Json<CreateSession>, JsonRejection>,
) -> Result<(StatusCode, Json<StateView>), ApiError> {
    let Json(req) = body?;
    let dataset = req.dataset;
    let (session, expression) = tokio::task::spawn_blocking(move || build_session(&req))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))??;
    let id = format!("s{}", app.inner.next_id.fetch_add(1, Ordering::Relaxed));
    let published = Arc::new(RwLock::new(Arc::new(Snapshot {
        state: placeholder_view(),
        network: Arc::new(session.network().clone()),
    })));
    let worker = Worker {
        id: id.clone(),
        session,
        expression,
        dataset,
        error: None,
        published: published.clone(),
        pace: app.inner.config.pace,
    };
    let state = worker.publish();
    let (tx, rx) = mpsc::channel();
    thread::Builder::new()
        .name(format!("session-{id}"))
        .spawn(move || worker.run(rx))
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
    let handle = Arc::new(SessionHandle {
        jobs: tx,
        snapshot: published,
        last_seen: Mutex::new(Instant::now()),
    });
    app.inner
        .sessions
        .lock()
        .expect("session table poisoned")
        .insert(id, handle);
    Ok((StatusCode::CREATED, Json(state)))
}

fn placeholder_view() -> StateView {
    StateView {
        id: String::new(),
        status: SessionStatus::Idle.as_str(),
        step: 0,
        epoch: 0,
        total_steps: 0,
        batches_per_epoch: 0,
        history_len: 0,
        history: Vec::new(),
        error: None,
        expression: String::new(),
        dataset: default_dataset(),
        config: TrainConfig::default(),
        layers: Vec::new(),
    }
}

async fn command(
    State(app): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<CommandBody>, JsonRejection>,
) -> Result<Json<StateView>, ApiError> {
    let handle = app.session(&id)?;
    let Json(body) = body?;
    let command = Command::parse(&body.command, body.steps)?;
    let (reply, answer) = oneshot::channel();
    handle
        .jobs
        .send(Job { command, reply })
        .map_err(|_| ApiError::unknown_session(&id))?;
    let state = answer.await.map_err(|_| ApiError::unknown_session(&id))??;
    Ok(Json(state))
}

async fn state(State(app): State<AppState>, Path(id): Path<String>) -> Result<Json<StateView>, ApiError> {
    Ok(Json(app.session(&id)?.snapshot().state.clone()))
}

#[derive(Debug, Serialize)]
struct GridUnit {
    label: String,
    detail: String,
    weights: Vec<f64>,
    bias: f64,
    values: Vec<f64>,
}

#[derive(Debug, Serialize)]
struct GridLayer {
    index: usize,
    label: Option<String>,
    frozen: bool,
    units: Vec<GridUnit>,
}

#[derive(Debug, Serialize)]
struct GridView {
    id: String,
    step: u64,
    resolution: usize,
    axis: Vec<f64>,
    output: Vec<f64>,
    layers: Vec<GridLayer>,
}

async fn grid(
    State(app): State<AppState>,
    Path(id): Path<String>,
    query: Result<Query<GridQuery>, QueryRejection>,
) -> Result<Json<GridView>, ApiError> {
    let handle = app.session(&id)?;
    let Query(q) = query?;
    let resolution = q.resolution.unwrap_or(DEFAULT_GRID_RESOLUTION);
    if !(2..=MAX_GRID_RESOLUTION).contains(&resolution) {
        return Err(ApiError::bad_request(format!(
            "resolution must lie in [2, {MAX_GRID_RESOLUTION}], got {resolution}"
        )));
    }
    let snap = handle.snapshot();
    let view = tokio::task::spawn_blocking(move || -> Result<GridView, ApiError> {
        let g = evaluate_grid(&snap.network, resolution).map_err(|e| ApiError::bad_request(e.to_string()))?;
        let layers = g
            .layers
            .into_iter()
            .zip(&snap.state.layers)
            .map(|(lg, lv)| GridLayer {
                index: lv.index,
                label: lg.label,
                frozen: lg.frozen,
                units: lg
                    .units
                    .into_iter()
                    .zip(&lv.units)
                    .map(|(ug, uv)| GridUnit {
                        label: ug.label,
                        detail: uv.detail.clone(),
                        weights: uv.weights.clone(),
                        bias: uv.bias,
                        values: ug.values,
                    })
                    .collect(),
            })
            .collect();
        Ok(GridView {
            id: snap.state.id.clone(),
            step: snap.state.step,
            resolution: g.resolution,
            axis: g.axis,
            output: g.output,
            layers,
        })
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))??;
    Ok(Json(view))
}

async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "no such resource")
}

pub fn router(app: AppState) -> Router {
    let static_dir = app.inner.config.static_dir.clone();
    let api = Router::new()
        .route("/datasets", get(datasets))
        .route("/session", post(create_session))
        .route("/session/{id}/command", post(command))
        .route("/session/{id}/state", get(state))
        .route("/session/{id}/grid", get(grid))
        .with_state(app);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir).append_index_html_on_directories(true)),
        None => api.fallback(not_found),
    }
}

/// Serves until `shutdown` resolves, expiring idle sessions in the
/// background.
pub async fn serve(
    listener: tokio::net::TcpListener,
    config: ServerConfig,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> anyhow::Result<()> {
    let app = AppState::new(config);
    let period = (app.inner.config.session_ttl / 4).clamp(Duration::from_millis(20), Duration::from_secs(60));
    let reaper = {
        let app = app.clone();
        tokio::spawn(async move {
            let mut tick = tokio::time::interval(period);
            loop {
                tick.tick().await;
                app.expire_idle();
            }
        })
    };
    let result = axum::serve(listener, router(app))
        .with_graceful_shutdown(shutdown)
        .await;
    reaper.abort();
    Ok(result?)
}

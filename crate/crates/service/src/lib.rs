//! HTTP session service: world stepping, agent control, model inspection
//! and a server-sent event stream of step records.
//!
//! Routes:
//! - `POST /sessions` `{world_id, seed, mode}`
//! - `POST /sessions/{id}/steps` `{move}` (agent sessions: `{}` lets the agent choose)
//! - `POST /sessions/{id}/agent/run` `{steps}`
//! - `GET /sessions/{id}/model` (agent sessions only)
//! - `GET /sessions/{id}/trace` (JSON lines)
//! - `GET /sessions/{id}/events?from=T`

use std::collections::hash_map::RandomState;
use std::collections::HashMap;
use std::convert::Infallible;
use std::hash::BuildHasher;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::stream::{self, Stream, StreamExt};
use lampworld::agent::{Agent, AgentPhase, Budgets};
use lampworld::model::ModelDocument;
use lampworld::trace::{StepRecord, Trace, WireRecord, WorldId};
use lampworld::world::{self, LampView, Move, PublicState, WorldState};
use serde::{Deserialize, Serialize};
use tokio::sync::broadcast;

/// Largest `steps` accepted by one agent run request.
pub const MAX_RUN_STEPS: u64 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Human,
    Agent,
}

#[derive(Debug, thiserror::Error)]
pub enum ApiError {
    #[error("no session {0}")]
    NotFound(String),
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    Forbidden(String),
    #[error("{0}")]
    Conflict(String),
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = match self {
            ApiError::NotFound(_) => StatusCode::NOT_FOUND,
            ApiError::Invalid(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ApiError::Forbidden(_) => StatusCode::FORBIDDEN,
            ApiError::Conflict(_) => StatusCode::CONFLICT,
        };
        (status, Json(serde_json::json!({ "error": self.to_string() }))).into_response()
    }
}

struct Session {
    mode: Mode,
    state: WorldState,
    lamps: LampView,
    trace: Trace,
    agent: Option<Agent>,
    events: broadcast::Sender<WireRecord>,
}

impl Session {
    fn step(&mut self, mv: Move) -> StepRecord {
        let (next, lamps) = world::step(&self.state, mv);
        self.state = next;
        self.lamps = lamps;
        let record = self.trace.push(mv, lamps);
        // No subscribers is not an error.
        let _ = self.events.send(WireRecord::from(&record));
        record
    }

    fn agent_step(&mut self) -> StepRecord {
        let lamps = self.lamps;
        let mv = self.agent.as_mut().expect("agent session").act(lamps);
        self.step(mv)
    }
}

#[derive(Clone, Default)]
pub struct AppState {
    sessions: Arc<RwLock<HashMap<String, Arc<Mutex<Session>>>>>,
    counter: Arc<AtomicU64>,
    salt: RandomState,
}

impl AppState {
    fn session(&self, id: &str) -> Result<Arc<Mutex<Session>>, ApiError> {
        let sessions = self.sessions.read().expect("session table poisoned");
        sessions.get(id).cloned().ok_or_else(|| ApiError::NotFound(id.to_string()))
    }

    fn fresh_id(&self) -> String {
        let n = self.counter.fetch_add(1, Ordering::Relaxed);
        format!("{:016x}{n:04x}", self.salt.hash_one(n))
    }
}

#[derive(Debug, Deserialize)]
pub struct CreateRequest {
    pub world_id: u8,
    pub seed: u64,
    pub mode: Mode,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CreateResponse {
    pub id: String,
    pub world_id: u8,
    pub seed: u64,
    pub mode: Mode,
    pub lamps: [u8; 5],
}

#[derive(Debug, Default, Deserialize)]
pub struct StepRequest {
    #[serde(rename = "move")]
    pub mv: Option<u8>,
}

/// Step reply for human sessions: the step index and lamps, plus the full
/// state in the fully observable world.
#[derive(Debug, Serialize, Deserialize)]
pub struct HumanStep {
    pub t: u64,
    pub lamps: [u8; 5],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub state: Option<PublicState>,
}

#[derive(Debug, Deserialize)]
pub struct RunRequest {
    pub steps: u64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RunResponse {
    pub steps: u64,
    pub phase: AgentPhase,
    pub exploit_sets: u64,
}

#[derive(Debug, Default, Deserialize)]
pub struct EventsQuery {
    pub from: Option<u64>,
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/steps", post(post_step))
        .route("/sessions/{id}/agent/run", post(run_agent))
        .route("/sessions/{id}/model", get(get_model))
        .route("/sessions/{id}/trace", get(get_trace))
        .route("/sessions/{id}/events", get(events))
        .with_state(state)
}

async fn create_session(
    State(app): State<AppState>,
    Json(req): Json<CreateRequest>,
) -> Result<(StatusCode, Json<CreateResponse>), ApiError> {
    let world = WorldId::try_from(req.world_id).map_err(ApiError::Invalid)?;
    let state = world::initial_state(req.seed);
    let lamps = world::initial_view(&state);
    let agent = (req.mode == Mode::Agent).then(|| Agent::new(req.seed, Budgets::default()));
    let (events, _) = broadcast::channel(1024);
    let session = Session { mode: req.mode, state, lamps, trace: Trace::new(world, req.seed), agent, events };
    let id = app.fresh_id();
    app.sessions
        .write()
        .expect("session table poisoned")
        .insert(id.clone(), Arc::new(Mutex::new(session)));
    let body = CreateResponse { id, world_id: req.world_id, seed: req.seed, mode: req.mode, lamps: lamps.to_bits() };
    Ok((StatusCode::CREATED, Json(body)))
}

async fn post_step(
    State(app): State<AppState>,
    Path(id): Path<String>,
    body: Option<Json<StepRequest>>,
) -> Result<Response, ApiError> {
    let session = app.session(&id)?;
    let mut s = session.lock().expect("session poisoned");
    let req = body.map(|Json(b)| b).unwrap_or_default();
    match (s.mode, req.mv) {
        (Mode::Human, Some(code)) => {
            let mv = Move::from_code(code).ok_or_else(|| ApiError::Invalid(format!("move {code} out of range 0..=7")))?;
            let r = s.step(mv);
            let state = (s.trace.world == WorldId::One).then(|| world::world1_view(&s.state));
            Ok(Json(HumanStep { t: r.t, lamps: r.lamps.to_bits(), state }).into_response())
        }
        (Mode::Human, None) => Err(ApiError::Invalid("human sessions must send a move".into())),
        (Mode::Agent, Some(_)) => Err(ApiError::Conflict("the agent chooses moves in agent sessions".into())),
        (Mode::Agent, None) => {
            let r = s.agent_step();
            Ok(Json(WireRecord::from(&r)).into_response())
        }
    }
}

async fn run_agent(
    State(app): State<AppState>,
    Path(id): Path<String>,
    Json(req): Json<RunRequest>,
) -> Result<Json<RunResponse>, ApiError> {
    if req.steps > MAX_RUN_STEPS {
        return Err(ApiError::Invalid(format!("at most {MAX_RUN_STEPS} steps per run")));
    }
    let session = app.session(&id)?;
    if session.lock().expect("session poisoned").mode != Mode::Agent {
        return Err(ApiError::Forbidden("not an agent session".into()));
    }
    let reply = tokio::task::spawn_blocking(move || {
        let mut s = session.lock().expect("session poisoned");
        for _ in 0..req.steps {
            s.agent_step();
        }
        let agent = s.agent.as_ref().expect("agent session");
        RunResponse { steps: s.trace.len() as u64, phase: agent.phase(), exploit_sets: agent.exploit_sets() }
    })
    .await
    .expect("agent run panicked");
    Ok(Json(reply))
}

async fn get_model(State(app): State<AppState>, Path(id): Path<String>) -> Result<Json<ModelDocument>, ApiError> {
    let session = app.session(&id)?;
    let s = session.lock().expect("session poisoned");
    match &s.agent {
        Some(agent) => Ok(Json(agent.model())),
        None => Err(ApiError::Forbidden("models exist only for agent sessions".into())),
    }
}

async fn get_trace(State(app): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let session = app.session(&id)?;
    let body = session.lock().expect("session poisoned").trace.to_jsonl();
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], body).into_response())
}

fn to_event(r: &WireRecord) -> Result<Event, Infallible> {
    Ok(Event::default().id(r.t.to_string()).data(serde_json::to_string(r).expect("record serializes")))
}

/// Backlog from `from` onward, then live records. Live records already in
/// the backlog are skipped by index.
async fn events(
    State(app): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<EventsQuery>,
) -> Result<Sse<impl Stream<Item = Result<Event, Infallible>>>, ApiError> {
    let session = app.session(&id)?;
    let (backlog, rx) = {
        let s = session.lock().expect("session poisoned");
        let rx = s.events.subscribe();
        let from = q.from.unwrap_or(0) as usize;
        let backlog: Vec<WireRecord> = s.trace.records().iter().skip(from).map(WireRecord::from).collect();
        (backlog, rx)
    };
    let next = backlog.last().map_or(q.from.unwrap_or(0), |r| r.t + 1);
    let live = stream::unfold((rx, next), |(mut rx, next)| async move {
        loop {
            match rx.recv().await {
                Ok(r) if r.t < next => continue,
                Ok(r) => return Some((r, (rx, r.t + 1))),
                Err(broadcast::error::RecvError::Lagged(_)) => continue,
                Err(broadcast::error::RecvError::Closed) => return None,
            }
        }
    });
    let all = stream::iter(backlog).chain(live).map(|r| to_event(&r));
    Ok(Sse::new(all).keep_alive(KeepAlive::default()))
}

/// Serves until the process is stopped.
pub async fn serve(addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(AppState::default())).await
}

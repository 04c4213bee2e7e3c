//! HTTP routes, request bodies and error mapping.

use std::collections::{BTreeMap, HashMap};
use std::convert::Infallible;
use std::sync::{Arc, RwLock};

use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use cdexplore_core::explorer::{ExplorerConfig, Roi};
use cdexplore_core::export::{encode_png, history_jsonl};
use cdexplore_core::features::CONSTRAINT_FEATURE_NAMES;
use cdexplore_core::metrics::diversity_report;
use cdexplore_core::systems::{RolloutConfig, RolloutOverrides, SystemKind};
use cdexplore_core::History;
use futures::Stream;
use serde::{Deserialize, Serialize};

use crate::session::{Action, Census, IllegalTransition, Session, SessionEvent, SessionState};

#[derive(Clone, Default)]
pub struct AppState {
    sessions: Arc<RwLock<HashMap<String, Arc<Session>>>>,
}

impl AppState {
    pub fn session(&self, id: &str) -> Result<Arc<Session>, ApiError> {
        self.sessions
            .read()
            .expect("session table lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::UnknownSession(id.to_string()))
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/control", post(control))
        .route("/sessions/{id}/roi", put(put_roi))
        .route("/sessions/{id}/balance", put(put_balance))
        .route("/sessions/{id}/events", get(events))
        .route("/sessions/{id}/patterns/{file}", get(pattern))
        .route("/sessions/{id}/metrics.csv", get(metrics_csv))
        .route("/sessions/{id}/history.jsonl", get(history))
        .with_state(state)
}

#[derive(Debug)]
pub enum ApiError {
    Validation(BTreeMap<String, String>),
    UnknownSession(String),
    IllegalTransition(IllegalTransition),
    UnknownFeature(String),
    NotFound(String),
    BadRequest(String),
}

#[derive(Serialize)]
struct ErrorBody {
    error: &'static str,
    message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    fields: Option<BTreeMap<String, String>>,
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, error, message, fields) = match self {
            ApiError::Validation(fields) => (
                StatusCode::UNPROCESSABLE_ENTITY,
                "validation_error",
                "invalid session configuration".into(),
                Some(fields),
            ),
            ApiError::UnknownSession(id) => (
                StatusCode::NOT_FOUND,
                "unknown_session",
                format!("no session `{id}`"),
                None,
            ),
            ApiError::IllegalTransition(t) => (
                StatusCode::CONFLICT,
                "illegal_transition",
                format!("cannot apply {:?} in state {:?}", t.action, t.from),
                None,
            ),
            ApiError::UnknownFeature(f) => (
                StatusCode::UNPROCESSABLE_ENTITY,
                "unknown_feature",
                format!("unknown constraint feature `{f}`"),
                None,
            ),
            ApiError::NotFound(m) => (StatusCode::NOT_FOUND, "not_found", m, None),
            ApiError::BadRequest(m) => (StatusCode::BAD_REQUEST, "bad_request", m, None),
        };
        (
            status,
            Json(ErrorBody {
                error,
                message,
                fields,
            }),
        )
            .into_response()
    }
}

impl From<cdexplore_core::Error> for ApiError {
    fn from(e: cdexplore_core::Error) -> Self {
        match e {
            cdexplore_core::Error::UnknownFeature(f) => ApiError::UnknownFeature(f),
            other => ApiError::BadRequest(other.to_string()),
        }
    }
}

fn default_roi() -> Roi {
    Roi::volume(0.6, 0.7)
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSession {
    pub system: SystemKind,
    #[serde(default)]
    pub config: ExplorerConfig,
    #[serde(default = "default_roi")]
    pub roi: Roi,
    #[serde(default)]
    pub rollout: RolloutOverrides,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Created {
    pub id: String,
    pub state: SessionState,
}

/// Field-level problems with a create request; empty when valid.
pub fn validate(req: &CreateSession, rollout: &RolloutConfig) -> BTreeMap<String, String> {
    let mut fields = BTreeMap::new();
    let c = &req.config;
    if c.n_init == 0 {
        fields.insert("config.n_init".into(), "must be at least 1".into());
    }
    if c.budget < c.n_init {
        fields.insert(
            "config.budget".into(),
            format!("must be at least n_init ({})", c.n_init),
        );
    }
    if !(0.0..=1.0).contains(&c.balance_prob) {
        fields.insert("config.balance_prob".into(), "must lie in [0, 1]".into());
    }
    if c.subspace_dims == 0 || c.subspace_dims > cdexplore_core::explorer::BEHAVIOR_DIM {
        fields.insert(
            "config.subspace_dims".into(),
            format!("must be in 1..={}", cdexplore_core::explorer::BEHAVIOR_DIM),
        );
    }
    if let Some(s) = &c.mutation_sigmas {
        let n = cdexplore_core::system(req.system, rollout.clone())
            .param_space()
            .len();
        if s.len() != n {
            fields.insert(
                "config.mutation_sigmas".into(),
                format!("expected {n} values, got {}", s.len()),
            );
        } else if s.iter().any(|v| !v.is_finite() || *v < 0.0) {
            fields.insert(
                "config.mutation_sigmas".into(),
                "must be finite and non-negative".into(),
            );
        }
    }
    for (i, con) in req.roi.constraints.iter().enumerate() {
        if !CONSTRAINT_FEATURE_NAMES.contains(&con.feature.as_str()) {
            fields.insert(
                format!("roi.constraints[{i}].feature"),
                format!("unknown feature `{}`", con.feature),
            );
        } else if !(con.lo <= con.hi) {
            fields.insert(
                format!("roi.constraints[{i}]"),
                format!("empty interval [{}, {}]", con.lo, con.hi),
            );
        }
    }
    if let Err(m) = rollout.validate() {
        fields.insert("rollout".into(), m);
    }
    fields
}

async fn create_session(
    State(app): State<AppState>,
    body: Result<Json<CreateSession>, axum::extract::rejection::JsonRejection>,
) -> Result<(StatusCode, Json<Created>), ApiError> {
    let Json(req) = body.map_err(|e| ApiError::BadRequest(e.body_text()))?;
    let rollout = req.rollout.apply(RolloutConfig::for_kind(req.system));
    let problems = validate(&req, &rollout);
    if !problems.is_empty() {
        return Err(ApiError::Validation(problems));
    }
    let id = uuid::Uuid::new_v4().simple().to_string();
    let session = Session::spawn(id.clone(), req.system, req.config, rollout, req.roi)?;
    app.sessions
        .write()
        .expect("session table lock")
        .insert(id.clone(), session);
    Ok((
        StatusCode::CREATED,
        Json(Created {
            id,
            state: SessionState::Idle,
        }),
    ))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SessionInfo {
    pub id: String,
    pub system: SystemKind,
    pub config: ExplorerConfig,
    pub rollout: RolloutConfig,
    pub roi: Roi,
    pub balance_prob: f64,
    pub state: SessionState,
    pub history_len: usize,
    pub inlier_count: usize,
    pub global_div: usize,
    pub constrained_div: usize,
    pub acceptance: Option<f64>,
}

async fn get_session(
    State(app): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<SessionInfo>, ApiError> {
    let s = app.session(&id)?;
    let snap = s.snapshot();
    Ok(Json(SessionInfo {
        id: s.id.clone(),
        system: s.system,
        config: s.config.clone(),
        rollout: s.rollout.clone(),
        roi: snap.roi.clone(),
        balance_prob: snap.balance_prob,
        state: snap.state,
        history_len: snap.entries.len(),
        inlier_count: snap.inlier_count(),
        global_div: snap.global_div,
        constrained_div: snap.constrained_div,
        acceptance: snap.acceptance(s.config.n_init),
    }))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateBody {
    pub state: SessionState,
}

async fn control(
    State(app): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<Action>, axum::extract::rejection::JsonRejection>,
) -> Result<Json<StateBody>, ApiError> {
    let s = app.session(&id)?;
    let Json(action) = body.map_err(|e| ApiError::BadRequest(e.body_text()))?;
    let state = s
        .control(action)
        .await
        .map_err(ApiError::IllegalTransition)?;
    Ok(Json(StateBody { state }))
}

async fn put_roi(
    State(app): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<Roi>, axum::extract::rejection::JsonRejection>,
) -> Result<Json<Census>, ApiError> {
    let s = app.session(&id)?;
    let Json(roi) = body.map_err(|e| ApiError::BadRequest(e.body_text()))?;
    Ok(Json(s.put_roi(roi).await?))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Balance {
    pub balance_prob: f64,
}

async fn put_balance(
    State(app): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<Balance>, axum::extract::rejection::JsonRejection>,
) -> Result<Json<Balance>, ApiError> {
    let s = app.session(&id)?;
    let Json(b) = body.map_err(|e| ApiError::BadRequest(e.body_text()))?;
    let balance_prob = s.set_balance(b.balance_prob).await?;
    Ok(Json(Balance { balance_prob }))
}

#[derive(Debug, Clone, Default, Deserialize)]
pub struct Since {
    #[serde(default)]
    pub since: usize,
}

/// Events from discovery `since` on. The stream ends once the session is done
/// and everything has been sent.
async fn events(
    State(app): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<Since>,
) -> Result<Sse<impl Stream<Item = Result<Event, Infallible>>>, ApiError> {
    let s = app.session(&id)?;
    let since = q.since;
    let pos = s.snapshot().replay_start(since);
    let rx = s.shared.changed.subscribe();
    let stream = futures::stream::unfold((pos, rx, s), move |(mut pos, mut rx, s)| async move {
        loop {
            {
                let snap = s.snapshot();
                while pos < snap.events.len() {
                    let ev = &snap.events[pos];
                    pos += 1;
                    // A reconnecting client may ask for an index past the replay point.
                    if ev.index().is_some_and(|i| i < since) {
                        continue;
                    }
                    let sse = Event::default()
                        .event(ev.name())
                        .id((pos - 1).to_string())
                        .json_data(ev)
                        .expect("events serialize");
                    drop(snap);
                    return Some((Ok(sse), (pos, rx, s)));
                }
                if snap.state == SessionState::Done {
                    return None;
                }
            }
            rx.changed().await.ok()?;
        }
    });
    Ok(Sse::new(stream).keep_alive(KeepAlive::default()))
}

async fn pattern(
    State(app): State<AppState>,
    Path((id, file)): Path<(String, String)>,
) -> Result<Response, ApiError> {
    let s = app.session(&id)?;
    let index: usize = file
        .strip_suffix(".png")
        .and_then(|i| i.parse().ok())
        .ok_or_else(|| ApiError::NotFound(format!("no pattern `{file}`")))?;
    let png = {
        let snap = s.snapshot();
        let entry = snap
            .entries
            .get(index)
            .ok_or_else(|| ApiError::NotFound(format!("no pattern {index}")))?;
        encode_png(&entry.observation)?
    };
    Ok(([(header::CONTENT_TYPE, "image/png")], png).into_response())
}

#[derive(Serialize)]
struct MetricsRow {
    sample_index: usize,
    global_diversity: usize,
    constrained_diversity: usize,
    inlier_flag: u8,
}

/// Per-sample diversity under the current ROI. Header only until the
/// evaluation space has been fitted.
async fn metrics_csv(
    State(app): State<AppState>,
    Path(id): Path<String>,
) -> Result<Response, ApiError> {
    let s = app.session(&id)?;
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    w.write_record([
        "sample_index",
        "global_diversity",
        "constrained_diversity",
        "inlier_flag",
    ])
    .expect("csv to memory");
    {
        let snap = s.snapshot();
        if let Some(m) = &snap.metrics {
            let classes: Vec<i8> = snap.entries.iter().map(|e| e.classification).collect();
            let n = snap.embeddings.len().min(classes.len());
            let report = diversity_report(
                &snap.embeddings[..n],
                &classes[..n],
                &m.global_spec,
                &m.constrained_spec,
                s.config.n_init,
            );
            for (i, &class) in classes[..n].iter().enumerate() {
                w.serialize(MetricsRow {
                    sample_index: i,
                    global_diversity: report.global[i],
                    constrained_diversity: report.constrained[i],
                    inlier_flag: u8::from(class == 1),
                })
                .expect("csv to memory");
            }
        }
    }
    let body = w.into_inner().expect("csv to memory");
    Ok(([(header::CONTENT_TYPE, "text/csv")], body).into_response())
}

async fn history(
    State(app): State<AppState>,
    Path(id): Path<String>,
) -> Result<Response, ApiError> {
    let s = app.session(&id)?;
    let text = {
        let snap = s.snapshot();
        let mut h = History::new();
        for e in &snap.entries {
            h.push(e.clone());
        }
        history_jsonl(&h)
    };
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], text).into_response())
}

/// Events already published for a session, for in-process consumers.
pub fn event_log(session: &Session) -> Vec<SessionEvent> {
    session.snapshot().events.clone()
}

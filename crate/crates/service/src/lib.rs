//! Local HTTP API over pipeline runs. Each run executes on its own thread and
//! parks at human decision gates until a decision is posted; clients poll.
//!
//! | method | path | body / query | response |
//! |---|---|---|---|
//! | POST | `/runs` | `{"task", "fixture"}` | 201 `{"id", "status"}` |
//! | GET | `/runs/{id}` | | [`RunSession`] |
//! | POST | `/runs/{id}/decision` | decision payload tagged by `gate` | `{"id", "gate", "status"}` |
//! | GET | `/runs/{id}/trace` | `since=N` | trace events with `seq >= N` |
//! | GET | `/runs/{id}/profile/{candidate}` | `route=oral\|iv_bolus\|iv_infusion` | profile CSV |
//!
//! `candidate` is the 0-based assessment index, the same position as in the
//! run result's `candidates`. Errors are `{"code", "message"}`.

mod error;
mod session;

use std::collections::HashMap;
use std::net::SocketAddr;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::IntoResponse;
use axum::routing::{get, post};
use axum::{Json, Router};
use leadforge_core::orchestrator::{
    run_pipeline_traced, DecisionPayload, PipelineRequest, Trace, TraceEvent,
};
use leadforge_core::pbpk::{derive_params, simulate, Route, DEFAULT_BW};
use leadforge_core::pharmacologist::{standard_regimens, STANDARD_DOSE_MG, STANDARD_HORIZON_H};
use leadforge_core::Execution;
use serde::{Deserialize, Serialize};
use serde_json::json;

pub use error::{ErrorBody, ServiceError};
pub use session::{AssessedCandidate, PendingDecision, RunSession, RunStatus};

use session::{lock, Parking, Session, Table};

#[derive(Clone)]
pub struct AppState {
    table: Table,
    fixtures: PathBuf,
    exec: Execution,
}

impl AppState {
    /// Fixture sets are the subdirectories of `fixtures`.
    pub fn new(fixtures: impl Into<PathBuf>, exec: Execution) -> Self {
        AppState {
            table: Arc::default(),
            fixtures: fixtures.into(),
            exec,
        }
    }

    pub fn session(&self, id: &str) -> Option<RunSession> {
        lock(&self.table).get(id).map(|s| s.view(id))
    }

    fn fixture_dir(&self, name: &str) -> Result<PathBuf, ServiceError> {
        let plain = !name.is_empty()
            && name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-');
        let dir = self.fixtures.join(name);
        if plain && dir.is_dir() {
            Ok(dir)
        } else {
            Err(ServiceError::UnknownFixture(name.to_string()))
        }
    }

    /// Registers a session and starts its run thread.
    pub fn start_run(&self, task: &str, fixture: &str) -> Result<String, ServiceError> {
        let dir = self.fixture_dir(fixture)?;
        let mut req = PipelineRequest::from_fixture(task, &dir)
            .map_err(|e| ServiceError::BadRequest(e.to_string()))?;
        req.exec = self.exec;
        let id = uuid::Uuid::new_v4().to_string();
        lock(&self.table).insert(id.clone(), Session::new());
        spawn_run(self.table.clone(), id.clone(), req)
            .map_err(|e| ServiceError::Unprocessable(format!("could not start run thread: {e}")))?;
        Ok(id)
    }
}

fn spawn_run(table: Table, id: String, req: PipelineRequest) -> std::io::Result<()> {
    std::thread::Builder::new()
        .name(format!("run-{id}"))
        .spawn(move || {
            let (obs_table, obs_id) = (table.clone(), id.clone());
            let trace = Trace::with_observer(move |ev| {
                if let Some(s) = lock(&obs_table).get_mut(&obs_id) {
                    s.observe(ev);
                }
            });
            let mut provider = Parking {
                table: table.clone(),
                id: id.clone(),
            };
            let outcome = catch_unwind(AssertUnwindSafe(|| {
                run_pipeline_traced(&req, &mut provider, trace)
            }))
            .map_err(|p| {
                let msg = p
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                format!("run panicked: {msg}")
            });
            if let Some(s) = lock(&table).get_mut(&id) {
                s.finish(outcome);
            }
        })?;
    Ok(())
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/runs", post(create_run))
        .route("/runs/{id}", get(get_run))
        .route("/runs/{id}/decision", post(post_decision))
        .route("/runs/{id}/trace", get(get_trace))
        .route("/runs/{id}/profile/{candidate}", get(get_profile))
        .with_state(state)
}

/// Serves on `addr` until the process exits.
pub fn serve(addr: SocketAddr, state: AppState) -> std::io::Result<()> {
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr).await?;
        axum::serve(listener, router(state)).await
    })
}

fn parse_json<T: for<'de> Deserialize<'de>>(body: &[u8]) -> Result<T, ServiceError> {
    serde_json::from_slice(body).map_err(|e| ServiceError::BadRequest(e.to_string()))
}

#[derive(Debug, Deserialize)]
struct CreateBody {
    #[serde(alias = "input")]
    task: Option<String>,
    fixture: Option<String>,
}

#[derive(Debug, Serialize)]
struct Created {
    id: String,
    status: RunStatus,
}

async fn create_run(
    State(state): State<AppState>,
    body: Bytes,
) -> Result<impl IntoResponse, ServiceError> {
    let b: CreateBody = parse_json(&body)?;
    let task = b
        .task
        .filter(|t| !t.trim().is_empty())
        .ok_or_else(|| ServiceError::BadRequest("missing field 'task'".into()))?;
    let fixture = b
        .fixture
        .ok_or_else(|| ServiceError::BadRequest("missing field 'fixture'".into()))?;
    let id = state.start_run(&task, &fixture)?;
    Ok((
        StatusCode::CREATED,
        Json(Created {
            id,
            status: RunStatus::Running,
        }),
    ))
}

fn not_found(id: &str) -> ServiceError {
    ServiceError::NotFound(format!("no run '{id}'"))
}

async fn get_run(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<RunSession>, ServiceError> {
    state.session(&id).map(Json).ok_or_else(|| not_found(&id))
}

async fn post_decision(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<impl IntoResponse, ServiceError> {
    let payload: DecisionPayload = parse_json(&body)?;
    let gate = payload.gate();
    let mut t = lock(&state.table);
    let s = t.get_mut(&id).ok_or_else(|| not_found(&id))?;
    s.deliver(payload).map_err(ServiceError::Conflict)?;
    Ok(Json(json!({ "id": id, "gate": gate, "status": s.status })))
}

async fn get_trace(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<HashMap<String, String>>,
) -> Result<Json<Vec<TraceEvent>>, ServiceError> {
    let since = match q.get("since") {
        Some(v) => v.parse::<u64>().map_err(|_| {
            ServiceError::BadRequest(format!("since must be a sequence number, got '{v}'"))
        })?,
        None => 0,
    };
    let t = lock(&state.table);
    let s = t.get(&id).ok_or_else(|| not_found(&id))?;
    Ok(Json(
        s.trace.iter().filter(|e| e.seq >= since).cloned().collect(),
    ))
}

async fn get_profile(
    State(state): State<AppState>,
    Path((id, candidate)): Path<(String, String)>,
    Query(q): Query<HashMap<String, String>>,
) -> Result<impl IntoResponse, ServiceError> {
    let route = match q.get("route") {
        Some(r) => Route::parse(r)
            .ok_or_else(|| ServiceError::BadRequest(format!("unknown route '{r}'")))?,
        None => Route::Oral,
    };
    let index: usize = candidate.parse().map_err(|_| {
        ServiceError::BadRequest(format!("candidate must be an index, got '{candidate}'"))
    })?;
    let admet = {
        let t = lock(&state.table);
        let s = t.get(&id).ok_or_else(|| not_found(&id))?;
        let c = s.candidates.get(index).ok_or_else(|| {
            ServiceError::NotFound(format!("run '{id}' has no candidate {index}"))
        })?;
        c.admet.clone()
    };
    let csv = profile_csv(&admet, route).map_err(ServiceError::Unprocessable)?;
    Ok(([(header::CONTENT_TYPE, "text/csv")], csv))
}

/// Concentration-time CSV for a candidate under one of the standard regimens.
pub fn profile_csv(
    admet: &leadforge_core::pbpk::AdmetProfile,
    route: Route,
) -> Result<String, String> {
    let params = derive_params(admet, DEFAULT_BW).map_err(|e| e.to_string())?;
    params.validate().map_err(|e| e.to_string())?;
    let regimen = standard_regimens(STANDARD_DOSE_MG)
        .into_iter()
        .find(|r| r.route == route)
        .expect("every route has a standard regimen");
    let profile = simulate(&params, &regimen, STANDARD_HORIZON_H).map_err(|e| e.to_string())?;
    Ok(profile.to_csv())
}

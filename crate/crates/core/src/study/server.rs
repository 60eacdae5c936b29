//! HTTP front of the study.
//!
//! | method | path | |
//! |---|---|---|
//! | GET | `/session` | new rater token and group |
//! | GET | `/next?token=` | next unanswered assignment (reference + 3 anonymized candidates) |
//! | POST | `/vote` | `{token, assignment_id, slot}`; 409 on a repeat, 404 on unknown ids |
//! | GET | `/results` | normalized matrix and vote-flow document |
//! | GET | `/progress` | ballot counts |
//! | GET | `/images/reference/{image_id}` | HR frame |
//! | GET | `/images/candidate/{assignment_id}/{slot}` | candidate frame |
//!
//! Images are read from `<root>/reference/<image_id>.<ext>` and
//! `<root>/models/<model name>/<image_id>.<ext>` (`png`, `ppm` or `pgm`).

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, MutexGuard};

use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use super::{export_flow, FlowExport, Study, VoteMatrix, TRIPLE};
use crate::error::Error;

pub struct ServerState {
    pub study: Study,
    /// Rater token -> group.
    sessions: HashMap<String, usize>,
    issued: usize,
    images: Option<PathBuf>,
}

pub type Shared = Arc<Mutex<ServerState>>;

impl ServerState {
    pub fn new(study: Study, images: Option<PathBuf>) -> Self {
        ServerState {
            study,
            sessions: HashMap::new(),
            issued: 0,
            images,
        }
    }

    pub fn shared(self) -> Shared {
        Arc::new(Mutex::new(self))
    }
}

/// An [`Error`] rendered as `{"error": ...}` with a matching status code.
pub struct ApiError(pub Error);

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        ApiError(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = match self.0 {
            Error::NotFound(_) => StatusCode::NOT_FOUND,
            Error::Conflict(_) => StatusCode::CONFLICT,
            Error::Usage(_) | Error::Contract(_) => StatusCode::BAD_REQUEST,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        (
            status,
            Json(serde_json::json!({ "error": self.0.to_string() })),
        )
            .into_response()
    }
}

fn lock(state: &Shared) -> MutexGuard<'_, ServerState> {
    state
        .lock()
        .unwrap_or_else(|poisoned| poisoned.into_inner())
}

#[derive(Serialize, Deserialize)]
pub struct SessionReply {
    pub token: String,
    pub group: usize,
}

async fn session(State(state): State<Shared>) -> Json<SessionReply> {
    let mut s = lock(&state);
    let group = s.issued % s.study.groups() + 1;
    s.issued += 1;
    let token = format!("{:032x}", rand::random::<u128>());
    s.sessions.insert(token.clone(), group);
    Json(SessionReply { token, group })
}

#[derive(Deserialize)]
pub struct TokenQuery {
    pub token: String,
}

#[derive(Serialize, Deserialize)]
pub struct NextReply {
    pub done: bool,
    pub remaining: usize,
    pub assignment_id: Option<String>,
    pub image_id: Option<String>,
    pub reference: Option<String>,
    pub candidates: Vec<String>,
}

fn group_of(s: &ServerState, token: &str) -> Result<usize, ApiError> {
    s.sessions
        .get(token)
        .copied()
        .ok_or_else(|| ApiError(Error::NotFound("unknown rater token".into())))
}

async fn next(
    State(state): State<Shared>,
    Query(q): Query<TokenQuery>,
) -> Result<Json<NextReply>, ApiError> {
    let s = lock(&state);
    let group = group_of(&s, &q.token)?;
    let remaining = s.study.remaining_for(&q.token, group);
    Ok(Json(match s.study.next_for(&q.token, group) {
        None => NextReply {
            done: true,
            remaining,
            assignment_id: None,
            image_id: None,
            reference: None,
            candidates: Vec::new(),
        },
        Some(a) => NextReply {
            done: false,
            remaining,
            assignment_id: Some(a.id.clone()),
            image_id: Some(a.image_id.clone()),
            reference: Some(format!("/images/reference/{}", a.image_id)),
            candidates: (0..TRIPLE)
                .map(|k| format!("/images/candidate/{}/{k}", a.id))
                .collect(),
        },
    }))
}

#[derive(Serialize, Deserialize)]
pub struct VoteRequest {
    pub token: String,
    pub assignment_id: String,
    pub slot: usize,
}

#[derive(Serialize, Deserialize)]
pub struct VoteReply {
    pub recorded: bool,
    pub remaining: usize,
}

async fn vote(
    State(state): State<Shared>,
    Json(req): Json<VoteRequest>,
) -> Result<Json<VoteReply>, ApiError> {
    let mut s = lock(&state);
    let group = group_of(&s, &req.token)?;
    s.study
        .vote(&req.token, group, &req.assignment_id, req.slot)?;
    Ok(Json(VoteReply {
        recorded: true,
        remaining: s.study.remaining_for(&req.token, group),
    }))
}

#[derive(Serialize)]
pub struct ResultsReply {
    pub models: Vec<String>,
    pub normalized: Vec<Vec<f64>>,
    /// Exact fractions `"p/q"`.
    pub normalized_exact: Vec<Vec<String>>,
    pub flow: FlowExport,
}

pub fn results(study: &Study) -> ResultsReply {
    results_from(study.matrix(), study.roster()).expect("roster matches matrix")
}

/// The results document for tallies replayed outside a live study.
pub fn results_from(matrix: &VoteMatrix, roster: &[String]) -> crate::Result<ResultsReply> {
    let flow = export_flow(matrix, roster)?;
    let exact = matrix.normalized();
    Ok(ResultsReply {
        models: roster.to_vec(),
        normalized: exact
            .iter()
            .map(|row| {
                row.iter()
                    .map(|r| *r.numer() as f64 / *r.denom() as f64)
                    .collect()
            })
            .collect(),
        normalized_exact: exact
            .iter()
            .map(|row| {
                row.iter()
                    .map(|r| format!("{}/{}", r.numer(), r.denom()))
                    .collect()
            })
            .collect(),
        flow,
    })
}

async fn results_handler(State(state): State<Shared>) -> Json<ResultsReply> {
    Json(results(&lock(&state).study))
}

#[derive(Serialize, Deserialize)]
pub struct ProgressReply {
    pub ballots: usize,
    pub assignments: usize,
    pub raters: usize,
    /// Ballots per group, group 1 first.
    pub per_group: Vec<usize>,
}

async fn progress(State(state): State<Shared>) -> Json<ProgressReply> {
    let s = lock(&state);
    let mut per_group = vec![0; s.study.groups()];
    for b in s.study.ballots() {
        if let Some(slot) = per_group.get_mut(b.group - 1) {
            *slot += 1;
        }
    }
    Json(ProgressReply {
        ballots: s.study.ballots().len(),
        assignments: s.study.assignments().len(),
        raters: s.sessions.len(),
        per_group,
    })
}

fn find_image(dir: PathBuf, image_id: &str) -> Result<(PathBuf, &'static str), ApiError> {
    for (ext, mime) in [
        ("png", "image/png"),
        ("ppm", "image/x-portable-pixmap"),
        ("pgm", "image/x-portable-graymap"),
    ] {
        let p = dir.join(format!("{image_id}.{ext}"));
        if p.is_file() {
            return Ok((p, mime));
        }
    }
    Err(ApiError(Error::NotFound(format!(
        "no image for `{image_id}`"
    ))))
}

async fn send_file(path: PathBuf, mime: &'static str) -> Result<Response, ApiError> {
    let bytes = tokio::fs::read(&path)
        .await
        .map_err(|e| ApiError(Error::io(&path, e)))?;
    Ok(([(header::CONTENT_TYPE, mime)], bytes).into_response())
}

fn image_root(s: &ServerState) -> Result<PathBuf, ApiError> {
    s.images
        .clone()
        .ok_or_else(|| ApiError(Error::NotFound("this server has no image directory".into())))
}

async fn reference_image(
    State(state): State<Shared>,
    UrlPath(image_id): UrlPath<String>,
) -> Result<Response, ApiError> {
    let (path, mime) = {
        let s = lock(&state);
        if !s.study.assignments().iter().any(|a| a.image_id == image_id) {
            return Err(ApiError(Error::NotFound(format!("image `{image_id}`"))));
        }
        find_image(image_root(&s)?.join("reference"), &image_id)?
    };
    send_file(path, mime).await
}

async fn candidate_image(
    State(state): State<Shared>,
    UrlPath((assignment_id, slot)): UrlPath<(String, usize)>,
) -> Result<Response, ApiError> {
    let (path, mime) = {
        let s = lock(&state);
        let a = s
            .study
            .assignment(&assignment_id)
            .ok_or_else(|| ApiError(Error::NotFound(format!("assignment `{assignment_id}`"))))?;
        let model = a
            .models
            .get(slot)
            .ok_or_else(|| ApiError(Error::NotFound(format!("slot {slot}"))))?;
        let name = &s.study.roster()[*model];
        find_image(image_root(&s)?.join("models").join(name), &a.image_id)?
    };
    send_file(path, mime).await
}

pub fn router(state: Shared) -> Router {
    Router::new()
        .route("/session", get(session))
        .route("/next", get(next))
        .route("/vote", post(vote))
        .route("/results", get(results_handler))
        .route("/progress", get(progress))
        .route("/images/reference/{image_id}", get(reference_image))
        .route(
            "/images/candidate/{assignment_id}/{slot}",
            get(candidate_image),
        )
        .with_state(state)
}

/// Serves until Ctrl-C.
pub async fn serve(addr: SocketAddr, state: Shared) -> crate::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|e| Error::Io {
            path: PathBuf::from(addr.to_string()),
            source: e,
        })?;
    log::info!("study server listening on http://{addr}");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| Error::io(addr.to_string(), e))
}

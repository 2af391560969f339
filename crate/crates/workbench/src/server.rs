//! Rating-session service.
//!
//! ```text
//! GET  /api/session?subject=<id>          {session_id, playlist}
//! GET  /api/video/<id>/schedule           schedule entries, framerate, resolution
//! GET  /api/video/<id>/frame/<k>          image bytes of source frame k (1-based)
//! POST /api/rating                        {session_id, video_id, score} -> {accepted, reason?}
//! ```
//!
//! A playlist item counts as played once its schedule has been fetched with
//! `?session_id=<id>`; only played items can be rated, and only once.
//! Failed requests carry a machine-readable `reason`.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use qoe_forge::restructure::parse_schedule;
use qoe_forge::subjective::{append_rating, Rating};
use qoe_forge::timeline::format_rational;

use crate::error::{CliError, CliResult};
use crate::manifest::Manifest;
use crate::seed::derive_seed;

pub const METHOD: &str = "SS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ItemState {
    Pending,
    Played,
    Rated,
}

#[derive(Debug, Clone, Serialize)]
pub struct Session {
    pub session_id: String,
    pub subject_id: String,
    pub seed: u64,
    pub method: &'static str,
    pub playlist: Vec<String>,
    #[serde(skip)]
    states: HashMap<String, ItemState>,
}

impl Session {
    pub fn state(&self, video_id: &str) -> Option<ItemState> {
        self.states.get(video_id).copied()
    }
}

struct Video {
    schedule: Value,
    frames: Vec<PathBuf>,
}

struct Sessions {
    by_id: HashMap<String, Session>,
    per_subject: HashMap<String, u64>,
}

pub struct AppState {
    videos: HashMap<String, Video>,
    order: Vec<String>,
    seed: u64,
    ratings: PathBuf,
    session_log: Option<PathBuf>,
    // one lock for session state and both files: the single writer
    inner: Mutex<Sessions>,
}

fn list_frames(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let mut files = Vec::new();
    for e in std::fs::read_dir(dir).map_err(|e| CliError::io(dir, e))? {
        let path = e.map_err(|e| CliError::io(dir, e))?.path();
        if path.is_file() {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

impl AppState {
    /// Loads every schedule of the manifest. Frame directories are optional.
    pub fn load(
        manifest: &Manifest,
        ratings: PathBuf,
        session_log: Option<PathBuf>,
        seed: u64,
    ) -> CliResult<Self> {
        let mut videos = HashMap::new();
        for e in &manifest.entries {
            let path = manifest.resolve(&e.schedule);
            let text = std::fs::read_to_string(&path).map_err(|err| CliError::io(&path, err))?;
            let (preamble, schedule) =
                parse_schedule(&text).map_err(|err| CliError::from(err).context(path.display()))?;
            let entries: Vec<Value> = schedule
                .entries
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    json!({
                        "entry_index": i + 1,
                        "source_frame_index": s.source_frame_index,
                        "render_pts": s.render_pts,
                        "flag": s.flag.as_str(),
                    })
                })
                .collect();
            let frames = match &e.frames {
                Some(dir) if manifest.resolve(dir).is_dir() => list_frames(&manifest.resolve(dir))?,
                _ => Vec::new(),
            };
            videos.insert(
                e.video_id.clone(),
                Video {
                    schedule: json!({
                        "video_id": e.video_id,
                        "framerate": format_rational(&preamble.framerate),
                        "resolution": preamble.resolution.to_string(),
                        "timebase": preamble.timebase.to_string(),
                        "nominal_duration": preamble.nominal_duration,
                        "entries": entries,
                    }),
                    frames,
                },
            );
        }
        Ok(AppState {
            videos,
            order: manifest
                .entries
                .iter()
                .map(|e| e.video_id.clone())
                .collect(),
            seed,
            ratings,
            session_log,
            inner: Mutex::new(Sessions {
                by_id: HashMap::new(),
                per_subject: HashMap::new(),
            }),
        })
    }

    /// Snapshot of a session, for inspection.
    pub fn session(&self, session_id: &str) -> Option<Session> {
        self.inner.lock().unwrap().by_id.get(session_id).cloned()
    }

    fn open_session(&self, subject_id: &str) -> Result<Session, String> {
        let mut inner = self.inner.lock().unwrap();
        let k = inner.per_subject.entry(subject_id.to_string()).or_insert(0);
        let seed = derive_seed(self.seed, &format!("{subject_id}#{k}"));
        *k += 1;
        let mut playlist = self.order.clone();
        playlist.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let session = Session {
            session_id: format!("{seed:016x}"),
            subject_id: subject_id.to_string(),
            seed,
            method: METHOD,
            states: playlist
                .iter()
                .map(|v| (v.clone(), ItemState::Pending))
                .collect(),
            playlist,
        };
        if let Some(log) = &self.session_log {
            let line = serde_json::to_string(&session).expect("sessions serialize") + "\n";
            append(log, &line).map_err(|e| format!("cannot write session log: {e}"))?;
        }
        tracing::info!(
            session_id = %session.session_id,
            subject_id,
            seed,
            "session opened"
        );
        inner
            .by_id
            .insert(session.session_id.clone(), session.clone());
        Ok(session)
    }
}

fn append(path: &Path, line: &str) -> std::io::Result<()> {
    use std::io::Write;
    let mut f = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)?;
    f.write_all(line.as_bytes())
}

fn failure(status: StatusCode, reason: &str) -> Response {
    (status, Json(json!({ "reason": reason }))).into_response()
}

fn rejected(status: StatusCode, reason: &str) -> Response {
    (status, Json(json!({ "accepted": false, "reason": reason }))).into_response()
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/session", get(get_session))
        .route("/api/video/{id}/schedule", get(get_schedule))
        .route("/api/video/{id}/frame/{k}", get(get_frame))
        .route("/api/rating", post(post_rating))
        .with_state(state)
}

#[derive(Deserialize)]
struct SessionQuery {
    subject: Option<String>,
}

async fn get_session(State(app): State<Arc<AppState>>, Query(q): Query<SessionQuery>) -> Response {
    let subject = q.subject.unwrap_or_default();
    let subject = subject.trim();
    if subject.is_empty() {
        return failure(StatusCode::BAD_REQUEST, "missing_subject");
    }
    if subject.len() > 128 || subject.chars().any(char::is_control) {
        return failure(StatusCode::BAD_REQUEST, "invalid_subject");
    }
    match app.open_session(subject) {
        Ok(s) => {
            Json(json!({ "session_id": s.session_id, "playlist": s.playlist })).into_response()
        }
        Err(e) => {
            tracing::error!("{e}");
            failure(StatusCode::INTERNAL_SERVER_ERROR, "storage_error")
        }
    }
}

#[derive(Deserialize)]
struct ScheduleQuery {
    session_id: Option<String>,
}

async fn get_schedule(
    State(app): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<ScheduleQuery>,
) -> Response {
    let Some(video) = app.videos.get(&id) else {
        return failure(StatusCode::NOT_FOUND, "unknown_video");
    };
    if let Some(sid) = q.session_id {
        let mut inner = app.inner.lock().unwrap();
        let Some(session) = inner.by_id.get_mut(&sid) else {
            return failure(StatusCode::NOT_FOUND, "unknown_session");
        };
        match session.states.get_mut(&id) {
            Some(s) if *s == ItemState::Pending => *s = ItemState::Played,
            Some(_) => {}
            None => return failure(StatusCode::NOT_FOUND, "not_in_playlist"),
        }
    }
    Json(video.schedule.clone()).into_response()
}

fn content_type(path: &Path) -> &'static str {
    match path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .as_deref()
    {
        Some("png") => "image/png",
        Some("jpg" | "jpeg") => "image/jpeg",
        Some("webp") => "image/webp",
        Some("bmp") => "image/bmp",
        Some("gif") => "image/gif",
        _ => "application/octet-stream",
    }
}

async fn get_frame(
    State(app): State<Arc<AppState>>,
    UrlPath((id, k)): UrlPath<(String, String)>,
) -> Response {
    let Some(video) = app.videos.get(&id) else {
        return failure(StatusCode::NOT_FOUND, "unknown_video");
    };
    let Ok(k) = k.parse::<usize>() else {
        return failure(StatusCode::BAD_REQUEST, "invalid_frame_index");
    };
    if video.frames.is_empty() {
        return failure(StatusCode::NOT_FOUND, "no_frames");
    }
    let Some(path) = k.checked_sub(1).and_then(|i| video.frames.get(i)) else {
        return failure(StatusCode::NOT_FOUND, "frame_out_of_range");
    };
    match tokio::fs::read(path).await {
        Ok(bytes) => ([(header::CONTENT_TYPE, content_type(path))], bytes).into_response(),
        Err(e) => {
            tracing::error!(path = %path.display(), "{e}");
            failure(StatusCode::INTERNAL_SERVER_ERROR, "storage_error")
        }
    }
}

/// Validated rating request.
struct RatingRequest {
    session_id: String,
    video_id: String,
    score: u8,
}

fn parse_rating(body: &[u8]) -> Result<RatingRequest, &'static str> {
    let v: Value = serde_json::from_slice(body).map_err(|_| "malformed_json")?;
    let text = |key: &str| v.get(key).and_then(Value::as_str).map(String::from);
    let session_id = text("session_id").ok_or("missing_session_id")?;
    let video_id = text("video_id").ok_or("missing_video_id")?;
    let score = v.get("score").ok_or("missing_score")?;
    let score = match score.as_i64() {
        Some(s) => s,
        None => match score.as_f64() {
            Some(f) if f.fract() != 0.0 => return Err("score_not_integer"),
            Some(f) => f as i64,
            None => return Err("score_not_integer"),
        },
    };
    if !(1..=5).contains(&score) {
        return Err("score_out_of_range");
    }
    Ok(RatingRequest {
        session_id,
        video_id,
        score: score as u8,
    })
}

async fn post_rating(State(app): State<Arc<AppState>>, body: Bytes) -> Response {
    let req = match parse_rating(&body) {
        Ok(r) => r,
        Err(reason) => return rejected(StatusCode::BAD_REQUEST, reason),
    };
    let mut inner = app.inner.lock().unwrap();
    let Some(session) = inner.by_id.get_mut(&req.session_id) else {
        return rejected(StatusCode::NOT_FOUND, "unknown_session");
    };
    match session.states.get(&req.video_id) {
        None => return rejected(StatusCode::NOT_FOUND, "not_in_playlist"),
        Some(ItemState::Pending) => return rejected(StatusCode::CONFLICT, "not_played"),
        Some(ItemState::Rated) => return rejected(StatusCode::CONFLICT, "already_rated"),
        Some(ItemState::Played) => {}
    }
    let rating = Rating {
        subject_id: session.subject_id.clone(),
        video_id: req.video_id.clone(),
        score: f64::from(req.score),
        timestamp: Some(chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)),
    };
    if let Err(e) = append_rating(&app.ratings, &rating) {
        tracing::error!("cannot store rating: {e}");
        return rejected(StatusCode::INTERNAL_SERVER_ERROR, "storage_error");
    }
    session.states.insert(req.video_id, ItemState::Rated);
    Json(json!({ "accepted": true })).into_response()
}

/// Serves until interrupted.
pub async fn serve(state: Arc<AppState>, addr: SocketAddr) -> CliResult<()> {
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|e| CliError::input(format!("cannot bind {addr}: {e}")))?;
    let local = listener
        .local_addr()
        .map_err(|e| CliError::Other(e.to_string()))?;
    tracing::info!(%local, "listening");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| CliError::Other(e.to_string()))
}

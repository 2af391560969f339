mod common;

use std::collections::BTreeSet;
use std::path::Path;
use std::sync::Arc;

use axum::body::{to_bytes, Body};
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use serde_json::{json, Value};
use tower::ServiceExt;

use common::*;
use qoe_forge::subjective::parse_ratings;
use qoe_forge_workbench::commands;
use qoe_forge_workbench::manifest::Manifest;
use qoe_forge_workbench::server::{router, AppState, ItemState};

struct Fixture {
    dir: tempfile::TempDir,
    manifest: Manifest,
    state: Arc<AppState>,
}

impl Fixture {
    fn new(seed: u64) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let manifest = small_corpus(dir.path());
        commands::distort(&manifest, 5, None).unwrap();
        commands::restructure(&manifest).unwrap();
        let first = &manifest.entries[0];
        let frames = manifest.resolve(first.frames.as_ref().unwrap());
        std::fs::create_dir_all(&frames).unwrap();
        for k in 1..=3u8 {
            std::fs::write(frames.join(format!("{k:06}.png")), [b'f', k]).unwrap();
        }
        let state = AppState::load(
            &manifest,
            dir.path().join("ratings.csv"),
            Some(dir.path().join("sessions.ndjson")),
            seed,
        )
        .unwrap();
        Fixture {
            dir,
            manifest,
            state: Arc::new(state),
        }
    }

    fn app(&self) -> Router {
        router(self.state.clone())
    }

    fn ratings_path(&self) -> std::path::PathBuf {
        self.dir.path().join("ratings.csv")
    }
}

async fn call(
    app: Router,
    method: Method,
    uri: &str,
    body: Option<Value>,
) -> (StatusCode, Vec<u8>) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(v) => req
            .header("content-type", "application/json")
            .body(Body::from(v.to_string())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let resp = app.oneshot(req).await.unwrap();
    let status = resp.status();
    (
        status,
        to_bytes(resp.into_body(), usize::MAX)
            .await
            .unwrap()
            .to_vec(),
    )
}

async fn get_json(app: Router, uri: &str) -> (StatusCode, Value) {
    let (status, bytes) = call(app, Method::GET, uri, None).await;
    (status, serde_json::from_slice(&bytes).unwrap())
}

async fn rate(app: Router, session: &str, video: &str, score: Value) -> (StatusCode, Value) {
    let (status, bytes) = call(
        app,
        Method::POST,
        "/api/rating",
        Some(json!({ "session_id": session, "video_id": video, "score": score })),
    )
    .await;
    (status, serde_json::from_slice(&bytes).unwrap())
}

async fn open(app: Router, subject: &str) -> (String, Vec<String>) {
    let (status, v) = get_json(app, &format!("/api/session?subject={subject}")).await;
    assert_eq!(status, StatusCode::OK);
    let playlist = v["playlist"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s.as_str().unwrap().to_string())
        .collect();
    (v["session_id"].as_str().unwrap().to_string(), playlist)
}

#[tokio::test]
async fn playlist_is_a_seeded_permutation() {
    let f = Fixture::new(11);
    let (sid, playlist) = open(f.app(), "alice").await;
    let ids: BTreeSet<&str> = f
        .manifest
        .entries
        .iter()
        .map(|e| e.video_id.as_str())
        .collect();
    assert_eq!(playlist.len(), ids.len());
    assert_eq!(
        playlist.iter().map(String::as_str).collect::<BTreeSet<_>>(),
        ids
    );

    let again = Fixture::new(11);
    assert_eq!(
        open(again.app(), "alice").await,
        (sid.clone(), playlist.clone())
    );
    let (sid2, playlist2) = open(f.app(), "alice").await;
    assert_ne!(sid2, sid);
    assert_ne!(playlist2, playlist);

    let session = f.state.session(&sid).unwrap();
    assert_eq!(session.method, "SS");
    let log = std::fs::read_to_string(f.dir.path().join("sessions.ndjson")).unwrap();
    assert_eq!(log.lines().count(), 2);
    assert!(log.contains(&format!("\"seed\":{}", session.seed)));
}

#[tokio::test]
async fn session_needs_a_subject() {
    let f = Fixture::new(1);
    let (status, v) = get_json(f.app(), "/api/session").await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(v["reason"], "missing_subject");
}

#[tokio::test]
async fn schedule_carries_timing_metadata() {
    let f = Fixture::new(1);
    let entry = f.manifest.entries.iter().find(|e| e.is_stalled()).unwrap();
    let (status, v) = get_json(f.app(), &format!("/api/video/{}/schedule", entry.video_id)).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v["framerate"], format!("{}/1", entry.framerate));
    assert_eq!(v["resolution"], entry.resolution.to_string());
    let entries = v["entries"].as_array().unwrap();
    assert!(entries.len() > 2 * entry.framerate as usize);
    assert_eq!(entries[0]["entry_index"], 1);
    assert!(entries.iter().any(|e| e["flag"] == "stall_repeat"));

    let (status, v) = get_json(f.app(), "/api/video/nope/schedule").await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(v["reason"], "unknown_video");
}

#[tokio::test]
async fn frames_are_served_in_order() {
    let f = Fixture::new(1);
    let id = &f.manifest.entries[0].video_id;
    let resp = f
        .app()
        .oneshot(
            Request::get(format!("/api/video/{id}/frame/2"))
                .body(Body::empty())
                .unwrap(),
        )
        .await
        .unwrap();
    assert_eq!(resp.status(), StatusCode::OK);
    assert_eq!(resp.headers()["content-type"], "image/png");
    assert_eq!(
        to_bytes(resp.into_body(), 16).await.unwrap().as_ref(),
        b"f\x02"
    );

    let (status, body) = call(
        f.app(),
        Method::GET,
        &format!("/api/video/{id}/frame/4"),
        None,
    )
    .await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert!(String::from_utf8(body)
        .unwrap()
        .contains("frame_out_of_range"));
    let other = &f.manifest.entries[1].video_id;
    let (status, _) = call(
        f.app(),
        Method::GET,
        &format!("/api/video/{other}/frame/1"),
        None,
    )
    .await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn rating_rules() {
    let f = Fixture::new(2);
    let (sid, playlist) = open(f.app(), "bob").await;
    let video = &playlist[0];

    let (status, v) = rate(f.app(), &sid, video, json!(3)).await;
    assert_eq!(
        (status, v["reason"].as_str()),
        (StatusCode::CONFLICT, Some("not_played"))
    );

    let (status, _) = get_json(
        f.app(),
        &format!("/api/video/{video}/schedule?session_id={sid}"),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(
        f.state.session(&sid).unwrap().state(video),
        Some(ItemState::Played)
    );

    for (score, reason) in [
        (json!(6), "score_out_of_range"),
        (json!(0), "score_out_of_range"),
        (json!(3.5), "score_not_integer"),
        (json!("3"), "score_not_integer"),
    ] {
        let (status, v) = rate(f.app(), &sid, video, score).await;
        assert_eq!(status, StatusCode::BAD_REQUEST);
        assert_eq!(v, json!({ "accepted": false, "reason": reason }));
    }
    let (status, v) = rate(f.app(), "0000", video, json!(3)).await;
    assert_eq!(
        (status, v["reason"].as_str()),
        (StatusCode::NOT_FOUND, Some("unknown_session"))
    );

    let (status, v) = rate(f.app(), &sid, video, json!(4)).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v, json!({ "accepted": true }));
    let (status, v) = rate(f.app(), &sid, video, json!(4)).await;
    assert_eq!(
        (status, v["reason"].as_str()),
        (StatusCode::CONFLICT, Some("already_rated"))
    );

    let (status, bytes) = call(f.app(), Method::POST, "/api/rating", None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(
        serde_json::from_slice::<Value>(&bytes).unwrap()["reason"],
        "malformed_json"
    );

    let stored = parse_ratings(&std::fs::read_to_string(f.ratings_path()).unwrap()).unwrap();
    assert_eq!(stored.len(), 1);
    assert_eq!(
        (
            stored[0].subject_id.as_str(),
            stored[0].video_id.as_str(),
            stored[0].score
        ),
        ("bob", video.as_str(), 4.0)
    );
    assert!(stored[0].timestamp.is_some());
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_sessions_write_whole_rows() {
    let f = Fixture::new(3);
    let mut tasks = Vec::new();
    for s in 0..8 {
        let app = f.app();
        tasks.push(tokio::spawn(async move {
            let (sid, playlist) = open(app.clone(), &format!("subject,{s}")).await;
            for v in &playlist {
                get_json(
                    app.clone(),
                    &format!("/api/video/{v}/schedule?session_id={sid}"),
                )
                .await;
                let (status, _) = rate(app.clone(), &sid, v, json!(1 + s % 5)).await;
                assert_eq!(status, StatusCode::OK);
            }
            playlist.len()
        }));
    }
    let mut expected = 0;
    for t in tasks {
        expected += t.await.unwrap();
    }
    let stored = parse_ratings(&std::fs::read_to_string(f.ratings_path()).unwrap()).unwrap();
    assert_eq!(stored.len(), expected);
    assert!(stored.iter().all(|r| r.subject_id.starts_with("subject,")));
}

#[test]
fn serve_requires_schedules() {
    let dir = tempfile::tempdir().unwrap();
    small_corpus(dir.path());
    let o = run(&[
        "serve",
        "--manifest",
        manifest_path(dir.path()).to_str().unwrap(),
        "--port",
        "0",
        "--seed",
        "1",
        "--ratings",
        Path::new(dir.path()).join("r.csv").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("schedules"), "{}", stderr(&o));
}

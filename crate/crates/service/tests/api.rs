use std::io::Cursor;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use base64::Engine;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use aoigram_service::{router, AppState};

struct Reply {
    status: StatusCode,
    headers: axum::http::HeaderMap,
    body: Vec<u8>,
}

impl Reply {
    fn json(&self) -> Value {
        serde_json::from_slice(&self.body).unwrap()
    }
}

async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> Reply {
    let mut req = Request::builder().method(method).uri(uri);
    let body = match body {
        Some(v) => {
            req = req.header("content-type", "application/json");
            Body::from(v.to_string())
        }
        None => Body::empty(),
    };
    let resp = app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
    let status = resp.status();
    let headers = resp.headers().clone();
    let body = resp
        .into_body()
        .collect()
        .await
        .unwrap()
        .to_bytes()
        .to_vec();
    Reply {
        status,
        headers,
        body,
    }
}

/// 120×40 white image with three 30×30 colored blocks at x = 0, 40, 80.
fn stimulus_png() -> String {
    let mut img = image::RgbImage::from_pixel(120, 40, image::Rgb([255, 255, 255]));
    let colors = [[200, 0, 0], [0, 0, 200], [0, 150, 0]];
    for (i, c) in colors.iter().enumerate() {
        for y in 0..32 {
            for x in 0..32 {
                img.put_pixel(i as u32 * 44 + x, y, image::Rgb(*c));
            }
        }
    }
    let mut out = Cursor::new(Vec::new());
    img.write_to(&mut out, image::ImageFormat::Png).unwrap();
    base64::engine::general_purpose::STANDARD.encode(out.into_inner())
}

/// Points on block `i` (0, 1, 2) or outside every block.
fn at(i: usize) -> (f64, f64) {
    match i {
        0 => (10.0, 10.0),
        1 => (54.0, 10.0),
        2 => (98.0, 10.0),
        _ => (60.0, 38.0),
    }
}

fn gaze_csv(participants: &[(&str, &str)]) -> String {
    let mut out = String::from("participant,t,x,y\n");
    for (p, walk) in participants {
        let mut t = 0;
        for c in walk.chars() {
            let i = match c {
                'A' => 0,
                'B' => 1,
                'C' => 2,
                _ => 3,
            };
            for _ in 0..6 {
                let (x, y) = at(i);
                out.push_str(&format!("{p},{t},{x},{y}\n"));
                t += 16;
            }
        }
    }
    out
}

async fn app() -> (Router, tempfile::TempDir) {
    let dir = tempfile::tempdir().unwrap();
    (router(AppState::open(dir.path()).unwrap()), dir)
}

async fn detected_session(app: &Router, walks: &[(&str, &str)]) -> String {
    let r = call(
        app,
        Method::POST,
        "/sessions",
        Some(json!({"image": stimulus_png(), "gaze": gaze_csv(walks)})),
    )
    .await;
    assert_eq!(
        r.status,
        StatusCode::CREATED,
        "{}",
        String::from_utf8_lossy(&r.body)
    );
    let id = r.json()["id"].as_str().unwrap().to_string();
    let d = call(
        app,
        Method::POST,
        &format!("/sessions/{id}/detect"),
        Some(json!({"cellSize": 4, "colors": 4})),
    )
    .await;
    assert_eq!(
        d.status,
        StatusCode::OK,
        "{}",
        String::from_utf8_lossy(&d.body)
    );
    assert_eq!(d.json()["tree"]["children"].as_array().unwrap().len(), 3);
    id
}

const WALKS: &[(&str, &str)] = &[("P1", "ABCABC"), ("P2", "ABCAB"), ("P3", "CBA")];

#[tokio::test]
async fn health_and_empty_list() {
    let (app, _dir) = app().await;
    let h = call(&app, Method::GET, "/health", None).await;
    assert_eq!(h.status, StatusCode::OK);
    assert_eq!(h.json()["version"], env!("CARGO_PKG_VERSION"));
    let l = call(&app, Method::GET, "/sessions", None).await;
    assert_eq!(l.status, StatusCode::OK);
    assert_eq!(l.json(), json!([]));
}

#[tokio::test]
async fn bad_uploads() {
    let (app, _dir) = app().await;
    let garbage = base64::engine::general_purpose::STANDARD.encode(b"not an image");
    let r = call(
        &app,
        Method::POST,
        "/sessions",
        Some(json!({"image": garbage, "gaze": gaze_csv(WALKS)})),
    )
    .await;
    assert_eq!(r.status, StatusCode::UNSUPPORTED_MEDIA_TYPE);

    let csv =
        "participant,t,x,y\nP1,0,1,1\nP1,16,2,2\nP1,32,3,3\nP1,48,4,4\nP1,64,5,5\nP1,80,six,6\n";
    let r = call(
        &app,
        Method::POST,
        "/sessions",
        Some(json!({"image": stimulus_png(), "gaze": csv})),
    )
    .await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(r.json()["line"], 7);
    assert_eq!(
        call(&app, Method::GET, "/sessions", None).await.json(),
        json!([])
    );
}

#[tokio::test]
async fn unknown_session_is_404() {
    let (app, _dir) = app().await;
    assert_eq!(
        call(&app, Method::GET, "/sessions/nope", None).await.status,
        StatusCode::NOT_FOUND
    );
    let d = call(&app, Method::POST, "/sessions/nope/detect", Some(json!({}))).await;
    assert_eq!(d.status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn gaze_round_trip_counts() {
    let (app, _dir) = app().await;
    let csv = gaze_csv(WALKS);
    let r = call(
        &app,
        Method::POST,
        "/sessions",
        Some(json!({"image": stimulus_png(), "gaze": csv})),
    )
    .await;
    let id = r.json()["id"].as_str().unwrap().to_string();
    let parts = r.json()["participants"].clone();
    assert_eq!(
        parts,
        json!([{"id": "P1", "points": 36}, {"id": "P2", "points": 30}, {"id": "P3", "points": 18}])
    );
    let back = call(&app, Method::GET, &format!("/sessions/{id}/gaze.csv"), None).await;
    let text = String::from_utf8(back.body).unwrap();
    assert_eq!(text.lines().count(), csv.lines().count());
}

#[tokio::test]
async fn detect_rejects_bad_params() {
    let (app, _dir) = app().await;
    let r = call(
        &app,
        Method::POST,
        "/sessions",
        Some(json!({"image": stimulus_png(), "gaze": gaze_csv(WALKS)})),
    )
    .await;
    let id = r.json()["id"].as_str().unwrap().to_string();
    let d = call(
        &app,
        Method::POST,
        &format!("/sessions/{id}/detect"),
        Some(json!({"cellSize": 0, "colors": 4})),
    )
    .await;
    assert_eq!(d.status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn edits() {
    let (app, _dir) = app().await;
    let id = detected_session(&app, WALKS).await;
    let url = format!("/sessions/{id}/aois");

    // Blocks sit at x in [0,32), [44,76), [88,120), y in [0,32).
    let ok = call(
        &app,
        Method::PATCH,
        &url,
        Some(json!({"ops": [{"op": "add-rect", "rect": [0, 33, 20, 5]}]})),
    )
    .await;
    assert_eq!(ok.status, StatusCode::OK);
    let leaves = ok.json()["tree"]["children"].as_array().unwrap().clone();
    assert_eq!(leaves.len(), 4);
    assert_eq!(leaves[3]["rect"], json!([0, 33, 20, 5]));
    assert_eq!(ok.json()["revision"], 2);

    // Overlaps the first block by 3 px on the right edge.
    let trimmed = call(
        &app,
        Method::PATCH,
        &url,
        Some(json!({"ops": [{"op": "add-rect", "rect": [29, 0, 10, 20]}]})),
    )
    .await;
    assert_eq!(trimmed.status, StatusCode::OK);
    let last = trimmed.json()["tree"]["children"]
        .as_array()
        .unwrap()
        .last()
        .unwrap()
        .clone();
    assert_eq!(last["rect"], json!([32, 0, 7, 20]));

    let inside = call(
        &app,
        Method::PATCH,
        &url,
        Some(json!({"ops": [{"op": "add-rect", "rect": [5, 5, 4, 4]}]})),
    )
    .await;
    assert_eq!(inside.status, StatusCode::CONFLICT);

    let g = call(
        &app,
        Method::PATCH,
        &url,
        Some(json!({"ops": [{"op": "group", "members": [1, 2], "label": "G"}]})),
    )
    .await;
    assert_eq!(
        g.status,
        StatusCode::OK,
        "{}",
        String::from_utf8_lossy(&g.body)
    );
    let group_id = g.json()["tree"]["children"][0]["id"].as_u64().unwrap();
    let ns = call(
        &app,
        Method::PATCH,
        &url,
        Some(json!({"ops": [{"op": "group", "members": [1, 3]}]})),
    )
    .await;
    assert_eq!(ns.status, StatusCode::CONFLICT);
    let before = call(&app, Method::GET, &format!("/sessions/{id}"), None)
        .await
        .json()["revision"]
        .clone();

    let ug = call(
        &app,
        Method::PATCH,
        &url,
        Some(json!({"ops": [{"op": "ungroup", "id": group_id}]})),
    )
    .await;
    assert_eq!(ug.status, StatusCode::OK);
    assert_eq!(ug.json()["revision"], before.as_u64().unwrap() + 1);
    let del = call(
        &app,
        Method::PATCH,
        &url,
        Some(json!({"ops": [{"op": "delete", "id": 3}]})),
    )
    .await;
    assert_eq!(del.status, StatusCode::OK);
    assert_eq!(del.json()["tree"]["children"].as_array().unwrap().len(), 4);
}

/// Largest sub-rectangle of `r` avoiding `obstacle`, by brute force.
fn best_area(r: [u32; 4], obstacle: [u32; 4]) -> u32 {
    let [x, y, w, h] = r;
    let mut best = 0;
    for x0 in x..x + w {
        for x1 in x0 + 1..=x + w {
            for y0 in y..y + h {
                for y1 in y0 + 1..=y + h {
                    let hit = x0 < obstacle[0] + obstacle[2]
                        && obstacle[0] < x1
                        && y0 < obstacle[1] + obstacle[3]
                        && obstacle[1] < y1;
                    if !hit {
                        best = best.max((x1 - x0) * (y1 - y0));
                    }
                }
            }
        }
    }
    best
}

#[tokio::test]
async fn add_rect_loses_minimal_area() {
    let (app, _dir) = app().await;
    let id = detected_session(&app, WALKS).await;
    let url = format!("/sessions/{id}/aois");
    let tree = call(&app, Method::GET, &format!("/sessions/{id}"), None)
        .await
        .json()["tree"]
        .clone();
    let first: Vec<u32> = serde_json::from_value(tree["children"][0]["rect"].clone()).unwrap();
    let obstacle = [first[0], first[1], first[2], first[3]];
    for rect in [[20u32, 10, 20, 10], [10, 25, 15, 12], [25, 28, 10, 8]] {
        let r = call(
            &app,
            Method::PATCH,
            &url,
            Some(json!({"ops": [{"op": "add-rect", "rect": rect}]})),
        )
        .await;
        assert_eq!(r.status, StatusCode::OK);
        let added = r.json()["tree"]["children"]
            .as_array()
            .unwrap()
            .last()
            .unwrap()["rect"]
            .clone();
        let got: Vec<u32> = serde_json::from_value(added).unwrap();
        assert_eq!(
            got[2] * got[3],
            best_area(rect, obstacle),
            "{rect:?} -> {got:?}"
        );
        let del_id = r.json()["tree"]["children"]
            .as_array()
            .unwrap()
            .last()
            .unwrap()["id"]
            .clone();
        call(
            &app,
            Method::PATCH,
            &url,
            Some(json!({"ops": [{"op": "delete", "id": del_id}]})),
        )
        .await;
    }
}

#[tokio::test]
async fn patterns_total_diff_and_cache() {
    let (app, _dir) = app().await;
    let id = detected_session(&app, WALKS).await;
    let url = format!("/sessions/{id}/patterns?k=1&n=2");
    let a = call(&app, Method::GET, &url, None).await;
    assert_eq!(a.status, StatusCode::OK);
    assert_eq!(a.headers["x-cache"], "miss");
    let rows = a.json()["patterns"].as_array().unwrap().clone();
    let totals: Vec<u64> = rows.iter().map(|r| r["total"].as_u64().unwrap()).collect();
    assert!(totals.windows(2).all(|w| w[0] >= w[1]));
    assert_eq!(rows[0]["chars"], "AB");
    assert_eq!(rows[0]["total"], 4);

    let b = call(&app, Method::GET, &url, None).await;
    assert_eq!(b.headers["x-cache"], "hit");
    assert_eq!(a.body, b.body);

    let sorted = call(&app, Method::GET, &format!("{url}&sort=P3"), None)
        .await
        .json();
    assert_eq!(sorted["stackOrder"][0], "P3");

    let same = call(
        &app,
        Method::GET,
        &format!("{url}&mode=diff&p=P1&q=P1"),
        None,
    )
    .await;
    assert_eq!(same.status, StatusCode::BAD_REQUEST);
    let unknown = call(
        &app,
        Method::GET,
        &format!("{url}&mode=diff&p=P1&q=P9"),
        None,
    )
    .await;
    assert_eq!(unknown.status, StatusCode::NOT_FOUND);
    let diff = call(
        &app,
        Method::GET,
        &format!("{url}&mode=diff&p=P1&q=P3"),
        None,
    )
    .await
    .json();
    assert!(diff["diff"]["uniqueP"]
        .as_array()
        .unwrap()
        .iter()
        .any(|e| e["pattern"] == "AB"));

    let bad_level = call(
        &app,
        Method::GET,
        &format!("/sessions/{id}/patterns?k=9"),
        None,
    )
    .await;
    assert_eq!(bad_level.status, StatusCode::BAD_REQUEST);

    let filtered = call(
        &app,
        Method::GET,
        &format!("{url}&threshold=2&op=more"),
        None,
    )
    .await
    .json();
    assert!(filtered["patterns"]
        .as_array()
        .unwrap()
        .iter()
        .all(|r| r["total"].as_u64().unwrap() > 2));

    // A mutation bumps the revision and invalidates the cache.
    call(
        &app,
        Method::PATCH,
        &format!("/sessions/{id}/aois"),
        Some(json!({"ops": [{"op": "add-rect", "rect": [0, 34, 5, 5]}]})),
    )
    .await;
    let c = call(&app, Method::GET, &url, None).await;
    assert_eq!(c.headers["x-cache"], "miss");
}

#[tokio::test]
async fn similarity_endpoint() {
    let (app, _dir) = app().await;
    let id = detected_session(&app, WALKS).await;
    let s = call(
        &app,
        Method::GET,
        &format!("/sessions/{id}/similarity?k=1&n=2"),
        None,
    )
    .await;
    assert_eq!(s.status, StatusCode::OK);
    let v = s.json();
    assert_eq!(v["participants"], json!(["P1", "P2", "P3"]));
    assert_eq!(v["mostSimilar"], json!(["P1", "P2"]));
    assert_eq!(v["values"][0][0].as_f64().unwrap(), 1.0);

    let solo = detected_session(&app, &[("P1", "ABC")]).await;
    let s = call(
        &app,
        Method::GET,
        &format!("/sessions/{solo}/similarity"),
        None,
    )
    .await;
    assert_eq!(s.status, StatusCode::CONFLICT);
}

#[tokio::test]
async fn layout_endpoint() {
    let (app, _dir) = app().await;
    let id = detected_session(&app, WALKS).await;
    let url = format!("/sessions/{id}/layout");
    let one = call(
        &app,
        Method::POST,
        &url,
        Some(json!({"patterns": ["AB"], "k": 1, "seed": 3})),
    )
    .await;
    assert_eq!(
        one.status,
        StatusCode::OK,
        "{}",
        String::from_utf8_lossy(&one.body)
    );
    let v = one.json();
    assert_eq!(v["nodes"].as_array().unwrap().len(), 2);
    assert_eq!(v["edges"].as_array().unwrap().len(), 1);
    assert_eq!(v["aois"].as_array().unwrap().len(), 3);
    let again = call(
        &app,
        Method::POST,
        &url,
        Some(json!({"patterns": ["AB"], "k": 1, "seed": 3})),
    )
    .await;
    assert_eq!(one.body, again.body);

    let starts = call(
        &app,
        Method::POST,
        &url,
        Some(json!({"aoi": "A", "mode": "starts", "k": 1})),
    )
    .await
    .json();
    let edges = starts["edges"].as_array().unwrap();
    assert!(!edges.is_empty());
    assert!(edges
        .iter()
        .all(|e| e["pattern"].as_str().unwrap().starts_with('A')));

    let empty = call(&app, Method::POST, &url, Some(json!({"patterns": []}))).await;
    assert_eq!(empty.status, StatusCode::BAD_REQUEST);
    let none = call(&app, Method::POST, &url, Some(json!({}))).await;
    assert_eq!(none.status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn svg_export() {
    let (app, _dir) = app().await;
    let id = detected_session(&app, WALKS).await;
    let r = call(
        &app,
        Method::GET,
        &format!("/sessions/{id}/export.svg?k=1&patterns=AB,BC&seed=1"),
        None,
    )
    .await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(r.headers["content-type"], "image/svg+xml");
    let svg = String::from_utf8(r.body).unwrap();
    assert!(svg.starts_with("<svg") || svg.starts_with("<?xml"));
    assert_eq!(svg.matches("<circle").count(), 4);
}

#[tokio::test]
async fn sessions_survive_restart() {
    let dir = tempfile::tempdir().unwrap();
    let first = router(AppState::open(dir.path()).unwrap());
    let id = detected_session(&first, WALKS).await;
    let before = call(
        &first,
        Method::GET,
        &format!("/sessions/{id}/patterns?k=1"),
        None,
    )
    .await
    .body;

    let second = router(AppState::open(dir.path()).unwrap());
    let list = call(&second, Method::GET, "/sessions", None).await.json();
    assert_eq!(list[0]["id"], id.as_str());
    assert_eq!(list[0]["revision"], 1);
    let after = call(
        &second,
        Method::GET,
        &format!("/sessions/{id}/patterns?k=1"),
        None,
    )
    .await
    .body;
    assert_eq!(before, after);
}

#[test]
fn unusable_data_dir_fails() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("plain-file");
    std::fs::write(&file, b"x").unwrap();
    assert!(AppState::open(&file).is_err());
}

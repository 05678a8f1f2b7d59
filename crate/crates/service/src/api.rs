//! Route handlers.

use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::Json;
use base64::Engine;
use serde::Deserialize;
use serde_json::{json, Value};
use tokio::sync::RwLock;

use aoigram_core::detect::{detect_aois, DetectionParams};
use aoigram_core::export::to_canonical_json;
use aoigram_core::gaze::write_gaze_csv;
use aoigram_core::layout::{highlight_pattern, LayoutParams};
use aoigram_core::mining::{AoiRole, Comparison, Pattern};
use aoigram_core::pipeline::{
    compute_layout, layout_response_json, pattern_rows, similarity_json, Selection,
};
use aoigram_core::svg::{render_svg, SvgScene};
use aoigram_core::Error as CoreError;

use crate::error::{ApiError, ApiResult};
use crate::session::{AoiEdit, Session};
use crate::AppState;

pub const DEFAULT_CELL_SIZE: u32 = 8;
pub const DEFAULT_COLORS: u32 = 8;

fn canonical(status: StatusCode, value: &Value) -> Response {
    (
        status,
        [(header::CONTENT_TYPE, "application/json")],
        to_canonical_json(value),
    )
        .into_response()
}

async fn session(state: &AppState, id: &str) -> ApiResult<Arc<RwLock<Session>>> {
    state
        .get(id)
        .await
        .ok_or_else(|| ApiError::not_found(format!("no session {id:?}")))
}

pub async fn health() -> Json<Value> {
    Json(json!({ "status": "ok", "version": env!("CARGO_PKG_VERSION") }))
}

pub async fn list_sessions(State(state): State<AppState>) -> Response {
    let mut out = Vec::new();
    for s in state.all().await {
        out.push(s.read().await.summary());
    }
    out.sort_by(|a, b| a["id"].as_str().cmp(&b["id"].as_str()));
    canonical(StatusCode::OK, &Value::Array(out))
}

#[derive(Deserialize)]
pub struct CreateSession {
    /// Base64-encoded PNG or JPEG.
    image: String,
    /// Gaze CSV text.
    gaze: String,
}

pub async fn create_session(
    State(state): State<AppState>,
    Json(body): Json<CreateSession>,
) -> ApiResult<Response> {
    let bytes = base64::engine::general_purpose::STANDARD
        .decode(body.image.trim())
        .map_err(|e| {
            ApiError::new(
                StatusCode::UNSUPPORTED_MEDIA_TYPE,
                format!("image is not base64: {e}"),
            )
        })?;
    let id = uuid::Uuid::new_v4().simple().to_string();
    let session = Session::create(id, bytes, body.gaze.as_bytes())?;
    let detail = session.detail();
    state.insert(session).await?;
    Ok(canonical(StatusCode::CREATED, &detail))
}

pub async fn get_session(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> ApiResult<Response> {
    let s = session(&state, &id).await?;
    let detail = s.read().await.detail();
    Ok(canonical(StatusCode::OK, &detail))
}

pub async fn export_gaze(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> ApiResult<Response> {
    let s = session(&state, &id).await?;
    let csv = write_gaze_csv(&s.read().await.paths);
    Ok(([(header::CONTENT_TYPE, "text/csv")], csv).into_response())
}

#[derive(Deserialize, Default)]
#[serde(rename_all = "camelCase")]
pub struct DetectRequest {
    cell_size: Option<u32>,
    colors: Option<u32>,
}

pub async fn detect(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Option<Json<DetectRequest>>,
) -> ApiResult<Response> {
    let body = body.map(|Json(b)| b).unwrap_or_default();
    let params = DetectionParams::new(
        body.cell_size.unwrap_or(DEFAULT_CELL_SIZE),
        body.colors.unwrap_or(DEFAULT_COLORS),
    )?;
    let s = session(&state, &id).await?;
    let mut guard = s.write().await;
    let stimulus = guard.stimulus.clone();
    let tree = tokio::task::spawn_blocking(move || detect_aois(&stimulus, params))
        .await
        .map_err(|e| ApiError::internal(e.to_string()))??;
    guard.commit_tree(tree)?;
    guard.set_detection(params);
    state.persist(&guard)?;
    Ok(canonical(StatusCode::OK, &tree_response(&guard)))
}

fn tree_response(s: &Session) -> Value {
    json!({ "revision": s.revision, "depth": s.tree.depth(), "tree": s.tree })
}

#[derive(Deserialize)]
pub struct EditRequest {
    ops: Vec<AoiEdit>,
}

pub async fn edit_aois(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Json(body): Json<EditRequest>,
) -> ApiResult<Response> {
    let s = session(&state, &id).await?;
    let mut guard = s.write().await;
    let tree = guard.apply_edits(&body.ops)?;
    guard.commit_tree(tree)?;
    state.persist(&guard)?;
    Ok(canonical(StatusCode::OK, &tree_response(&guard)))
}

#[derive(Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableMode {
    Total,
    Diff,
}

#[derive(Deserialize)]
pub struct PatternQuery {
    k: Option<usize>,
    n: Option<usize>,
    tau: Option<u32>,
    mode: Option<TableMode>,
    /// Participant whose bars go to the bottom of each stack.
    sort: Option<String>,
    p: Option<String>,
    q: Option<String>,
    threshold: Option<u64>,
    op: Option<Comparison>,
}

pub async fn patterns(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(query): Query<PatternQuery>,
) -> ApiResult<Response> {
    let s = session(&state, &id).await?;
    let guard = s.read().await;
    let params = guard.mining_params(query.k, query.n, query.tau);
    let (table, hit) = guard.table(params)?;
    let head = json!({ "revision": guard.revision, "level": params.level, "n": params.n, "tau": params.tau });
    let mut body = match query.mode.unwrap_or(TableMode::Total) {
        TableMode::Total => {
            let filtered = match query.threshold {
                Some(t) => table.filter_by_threshold(query.op.unwrap_or(Comparison::More), t),
                None => (*table).clone(),
            };
            let (order, stack) = match &query.sort {
                Some(focus) => {
                    let order = filtered.sorted_by_participant(focus)?;
                    let mut stack = vec![focus.clone()];
                    stack.extend(
                        filtered
                            .participants
                            .iter()
                            .filter(|p| *p != focus)
                            .cloned(),
                    );
                    (order, stack)
                }
                None => (filtered.sorted(), filtered.participants.clone()),
            };
            json!({
                "mode": "total",
                "participants": filtered.participants,
                "stackOrder": stack,
                "patterns": pattern_rows(&filtered, &order),
            })
        }
        TableMode::Diff => {
            let (Some(p), Some(q)) = (&query.p, &query.q) else {
                return Err(ApiError::bad_request("diff mode needs p and q"));
            };
            json!({ "mode": "diff", "diff": table.diff(p, q)? })
        }
    };
    body.as_object_mut()
        .expect("object")
        .extend(head.as_object().expect("object").clone());
    let mut resp = canonical(StatusCode::OK, &body);
    resp.headers_mut().insert(
        "x-cache",
        HeaderValue::from_static(if hit { "hit" } else { "miss" }),
    );
    Ok(resp)
}

#[derive(Deserialize)]
pub struct MiningQuery {
    k: Option<usize>,
    n: Option<usize>,
    tau: Option<u32>,
}

pub async fn similarity(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(query): Query<MiningQuery>,
) -> ApiResult<Response> {
    let s = session(&state, &id).await?;
    let guard = s.read().await;
    let params = guard.mining_params(query.k, query.n, query.tau);
    let (table, _) = guard.table(params)?;
    let mut body = similarity_json(&table.similarity_matrix()?);
    body["level"] = json!(params.level);
    body["n"] = json!(params.n);
    body["tau"] = json!(params.tau);
    body["revision"] = json!(guard.revision);
    Ok(canonical(StatusCode::OK, &body))
}

fn parse_selection(
    patterns: Option<Vec<String>>,
    aoi: Option<&str>,
    mode: Option<AoiRole>,
) -> ApiResult<Option<Selection>> {
    match (patterns, aoi) {
        (Some(_), Some(_)) => Err(ApiError::bad_request(
            "give either patterns or aoi, not both",
        )),
        (Some(p), None) => Ok(Some(Selection::Patterns(p))),
        (None, Some(a)) => {
            let mut chars = a.chars();
            match (chars.next(), chars.next()) {
                (Some(ch), None) => Ok(Some(Selection::Aoi {
                    ch,
                    role: mode.unwrap_or(AoiRole::Passes),
                })),
                _ => Err(ApiError::bad_request(format!(
                    "aoi must be one character, got {a:?}"
                ))),
            }
        }
        (None, None) => Ok(None),
    }
}

#[derive(Deserialize)]
pub struct LayoutRequest {
    patterns: Option<Vec<String>>,
    aoi: Option<String>,
    mode: Option<AoiRole>,
    k: Option<usize>,
    n: Option<usize>,
    tau: Option<u32>,
    seed: Option<u64>,
    iterations: Option<usize>,
    highlight: Option<String>,
}

pub async fn layout(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Json(body): Json<LayoutRequest>,
) -> ApiResult<Response> {
    let selection = parse_selection(body.patterns, body.aoi.as_deref(), body.mode)?
        .ok_or(CoreError::EmptySelection)?;
    let s = session(&state, &id).await?;
    let guard = s.read().await;
    let params = guard.mining_params(body.k, body.n, body.tau);
    let (table, _) = guard.table(params)?;
    let defaults = LayoutParams::default();
    let lp = LayoutParams {
        seed: body.seed.unwrap_or(defaults.seed),
        iterations: body.iterations.unwrap_or(defaults.iterations),
        ..defaults
    };
    let mut graph = compute_layout(&guard.tree, &table, &selection, &lp)?;
    if let Some(h) = body.highlight {
        highlight_pattern(&mut graph, &Pattern(h));
    }
    let mut out = layout_response_json(&guard.tree, params.level, &graph)?;
    out["revision"] = json!(guard.revision);
    out["n"] = json!(params.n);
    out["tau"] = json!(params.tau);
    Ok(canonical(StatusCode::OK, &out))
}

#[derive(Deserialize)]
pub struct SvgQuery {
    k: Option<usize>,
    n: Option<usize>,
    tau: Option<u32>,
    /// Comma-separated pattern ids.
    patterns: Option<String>,
    aoi: Option<String>,
    mode: Option<AoiRole>,
    seed: Option<u64>,
}

pub async fn export_svg(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(query): Query<SvgQuery>,
) -> ApiResult<Response> {
    let s = session(&state, &id).await?;
    let guard = s.read().await;
    let params = guard.mining_params(query.k, query.n, query.tau);
    guard.tree.check_level(params.level)?;
    let patterns = query.patterns.map(|p| {
        p.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(String::from)
            .collect()
    });
    let graph = match parse_selection(patterns, query.aoi.as_deref(), query.mode)? {
        Some(selection) => {
            let (table, _) = guard.table(params)?;
            let lp = LayoutParams {
                seed: query.seed.unwrap_or(0),
                ..LayoutParams::default()
            };
            Some(compute_layout(&guard.tree, &table, &selection, &lp)?)
        }
        None => None,
    };
    let png = guard.stimulus.encode_png();
    let svg = render_svg(&SvgScene {
        width: guard.stimulus.width,
        height: guard.stimulus.height,
        image_png: Some(&png),
        tree: &guard.tree,
        level: params.level,
        graph: graph.as_ref(),
    })?;
    Ok(([(header::CONTENT_TYPE, "image/svg+xml")], svg).into_response())
}

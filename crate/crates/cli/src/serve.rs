//! HTTP/JSON editing service.
//!
//! Every response is `{"ok": true, "data": ...}` or
//! `{"ok": false, "error": {"status": ..., "message": ...}}`. Edits on one
//! session run one at a time; sessions are independent. Stroke
//! coordinates are pixel coordinates with row 0 at the bottom, as in PFM.
//!
//! | route | body | data |
//! |---|---|---|
//! | `GET /health` | | `{status, sessions}` |
//! | `GET /session/{id}` | | session summary with base64 PNG and links |
//! | `GET /session/{id}/image.png`, `/image.pfm` | | the input image |
//! | `GET /session/{id}/normals/{nid}` | | PFM normal map |
//! | `GET /session/{id}/rm/{rid}` | | PFM map (undefined cells are 0) |
//! | `GET /session/{id}/rm/{rid}/sphere.png` | | the map on a sphere |
//! | `POST /paint` | `{session, normals_id?, strokes}` | `{normals_id}` |
//! | `POST /reshade` | `{session, normals_id}` | preview |
//! | `POST /transfer` | `{session, rm_id}` or `{session, rm_pfm}` | preview and `rm_id` |

use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;

use anyhow::Context;
use axum::body::Bytes;
use axum::extract::rejection::BytesRejection;
use axum::extract::{DefaultBodyLimit, Path as UrlPath, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use lumisphere::edit::{encode_png, material_transfer, normal_paint, shape_reshade, EditOutput, EditSession, Stroke};
use lumisphere::image::{NormalMap, RadianceImage};
use lumisphere::pfm::{self, FloatMap};
use lumisphere::rmap::{render_sphere, ReflectanceMap};
use lumisphere::synth::Manifest;
use serde::Deserialize;
use serde_json::{json, Value};
use tokio::sync::Mutex;

/// Size of the sphere thumbnails.
pub const THUMBNAIL: usize = 128;
pub const ORIGINAL_NORMALS: &str = "n0";

pub struct Session {
    edit: EditSession,
    normals: HashMap<String, NormalMap>,
    uploads: HashMap<String, ReflectanceMap>,
    next: usize,
}

impl Session {
    pub fn new(image: RadianceImage, normals: NormalMap, rm: ReflectanceMap) -> anyhow::Result<Self> {
        let edit = EditSession::new(image, normals.clone(), rm)?;
        Ok(Self { edit, normals: HashMap::from([(ORIGINAL_NORMALS.to_string(), normals)]), uploads: HashMap::new(), next: 1 })
    }

    /// Reads `image.pfm`, `normals.pfm` and `rm.pfm` (with mask sidecars).
    pub fn load_dir(dir: &Path) -> anyhow::Result<Self> {
        let image = pfm::read_image(&dir.join("image.pfm"))?;
        let normals = pfm::read_normals(&dir.join("normals.pfm"))?;
        let rm = pfm::read_map(&dir.join("rm.pfm"))?;
        Self::new(image, normals, rm).with_context(|| format!("session {}", dir.display()))
    }

    /// The tone-mapped image, normals and ground-truth map of a dataset item.
    pub fn load_item(root: &Path, manifest: &Manifest, id: &str) -> anyhow::Result<Self> {
        let item = manifest.item(id).with_context(|| format!("no item {id} in {}", root.display()))?;
        let f = &item.files;
        Self::new(pfm::read_image(&root.join(&f.image))?, pfm::read_normals(&root.join(&f.normals))?, pfm::read_map(&root.join(&f.rm_gt))?)
    }

    fn fresh_id(&mut self, prefix: &str) -> String {
        let id = format!("{prefix}{}", self.next);
        self.next += 1;
        id
    }
}

pub struct AppState {
    sessions: HashMap<String, Arc<Mutex<Session>>>,
    /// Each session's own map under the session id, shared for transfers.
    library: HashMap<String, ReflectanceMap>,
    max_upload_bytes: usize,
}

impl AppState {
    pub fn new(sessions: Vec<(String, Session)>, max_upload_bytes: usize) -> Self {
        let library = sessions.iter().map(|(id, s)| (id.clone(), s.edit.rm().clone())).collect();
        let sessions = sessions.into_iter().map(|(id, s)| (id, Arc::new(Mutex::new(s)))).collect();
        Self { sessions, library, max_upload_bytes }
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self { status, message: message.into() }
    }

    fn not_found(what: impl std::fmt::Display) -> Self {
        Self::new(StatusCode::NOT_FOUND, format!("unknown {what}"))
    }

    fn unprocessable(message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({ "ok": false, "error": { "status": self.status.as_u16(), "message": self.message } });
        (self.status, Json(body)).into_response()
    }
}

type ApiResult = Result<Response, ApiError>;

fn ok(data: Value) -> ApiResult {
    Ok(Json(json!({ "ok": true, "data": data })).into_response())
}

fn binary(content_type: &'static str, bytes: Vec<u8>) -> ApiResult {
    Ok(([(header::CONTENT_TYPE, content_type)], bytes).into_response())
}

fn session(state: &AppState, id: &str) -> Result<Arc<Mutex<Session>>, ApiError> {
    state.sessions.get(id).cloned().ok_or_else(|| ApiError::not_found(format!("session {id}")))
}

/// Parses a JSON body, mapping size and shape problems to 413 and 422.
fn parse_body<T: serde::de::DeserializeOwned>(body: Result<Bytes, BytesRejection>, limit: usize) -> Result<T, ApiError> {
    let bytes = body.map_err(|e| ApiError::new(e.status(), e.body_text()))?;
    if bytes.len() > limit {
        return Err(ApiError::new(StatusCode::PAYLOAD_TOO_LARGE, format!("body of {} bytes exceeds {limit}", bytes.len())));
    }
    serde_json::from_slice(&bytes).map_err(|e| ApiError::unprocessable(format!("malformed request: {e}")))
}

/// Runs `f` on the locked session off the async workers.
async fn with_session<R: Send + 'static>(
    s: Arc<Mutex<Session>>,
    f: impl FnOnce(&mut Session) -> Result<R, ApiError> + Send + 'static,
) -> Result<R, ApiError> {
    let mut guard = s.lock_owned().await;
    tokio::task::spawn_blocking(move || f(&mut guard))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
}

fn preview(out: &EditOutput) -> Value {
    json!({
        "png": B64.encode(encode_png(&out.image)),
        "width": out.image.width,
        "height": out.image.height,
        "unknown_pixels": out.unknown_pixels,
        "out_of_gamut": out.out_of_gamut,
    })
}

async fn health(State(st): State<Arc<AppState>>) -> ApiResult {
    ok(json!({ "status": "ok", "sessions": st.sessions.len() }))
}

async fn get_session(State(st): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> ApiResult {
    let s = session(&st, &id)?;
    let s = s.lock().await;
    let img = s.edit.image();
    let mut normals_ids: Vec<&String> = s.normals.keys().collect();
    normals_ids.sort();
    let mut rm_ids: Vec<&String> = st.library.keys().chain(s.uploads.keys()).collect();
    rm_ids.sort();
    ok(json!({
        "id": id,
        "width": img.width,
        "height": img.height,
        "image_png": B64.encode(encode_png(img)),
        "normals_id": ORIGINAL_NORMALS,
        "rm_id": id,
        "normals_ids": normals_ids,
        "rm_ids": rm_ids,
        "links": {
            "image_png": format!("/session/{id}/image.png"),
            "image_pfm": format!("/session/{id}/image.pfm"),
            "normals_pfm": format!("/session/{id}/normals/{ORIGINAL_NORMALS}"),
            "rm_pfm": format!("/session/{id}/rm/{id}"),
            "rm_sphere_png": format!("/session/{id}/rm/{id}/sphere.png"),
        },
    }))
}

async fn image_png(State(st): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> ApiResult {
    let s = session(&st, &id)?;
    let bytes = encode_png(s.lock().await.edit.image());
    binary("image/png", bytes)
}

async fn image_pfm(State(st): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> ApiResult {
    let s = session(&st, &id)?;
    let s = s.lock().await;
    let img = s.edit.image();
    let data = img.rgb.iter().flat_map(|c| c.0.map(|v| v as f32)).collect();
    binary("image/x-portable-floatmap", FloatMap { width: img.width, height: img.height, channels: 3, data }.encode())
}

async fn normals_pfm(State(st): State<Arc<AppState>>, UrlPath((id, nid)): UrlPath<(String, String)>) -> ApiResult {
    let s = session(&st, &id)?;
    let s = s.lock().await;
    let nm = s.normals.get(&nid).ok_or_else(|| ApiError::not_found(format!("normal map {nid}")))?;
    let data = nm.normals.iter().flat_map(|n| [n.x as f32, n.y as f32, n.z as f32]).collect();
    binary("image/x-portable-floatmap", FloatMap { width: nm.width, height: nm.height, channels: 3, data }.encode())
}

fn find_rm(st: &AppState, s: &Session, rid: &str) -> Result<ReflectanceMap, ApiError> {
    s.uploads.get(rid).or_else(|| st.library.get(rid)).cloned().ok_or_else(|| ApiError::not_found(format!("reflectance map {rid}")))
}

async fn rm_pfm(State(st): State<Arc<AppState>>, UrlPath((id, rid)): UrlPath<(String, String)>) -> ApiResult {
    let s = session(&st, &id)?;
    let rm = find_rm(&st, &*s.lock().await, &rid)?;
    binary("image/x-portable-floatmap", pfm::encode_map(&rm).0)
}

async fn rm_sphere(State(st): State<Arc<AppState>>, UrlPath((id, rid)): UrlPath<(String, String)>) -> ApiResult {
    let s = session(&st, &id)?;
    let rm = find_rm(&st, &*s.lock().await, &rid)?;
    binary("image/png", encode_png(&render_sphere(&rm, THUMBNAIL).image))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PaintRequest {
    session: String,
    #[serde(default)]
    normals_id: Option<String>,
    strokes: Vec<Stroke>,
}

async fn paint(State(st): State<Arc<AppState>>, body: Result<Bytes, BytesRejection>) -> ApiResult {
    let req: PaintRequest = parse_body(body, st.max_upload_bytes)?;
    let s = session(&st, &req.session)?;
    let id = with_session(s, move |s| {
        let base = req.normals_id.as_deref().unwrap_or(ORIGINAL_NORMALS);
        let mut nm = s.normals.get(base).cloned().ok_or_else(|| ApiError::not_found(format!("normal map {base}")))?;
        for (k, stroke) in req.strokes.iter().enumerate() {
            nm = normal_paint(&nm, stroke).map_err(|e| ApiError::unprocessable(format!("stroke {k}: {e}")))?;
        }
        let id = s.fresh_id("n");
        s.normals.insert(id.clone(), nm);
        Ok(id)
    })
    .await?;
    ok(json!({ "normals_id": id }))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ReshadeRequest {
    session: String,
    normals_id: String,
}

async fn reshade(State(st): State<Arc<AppState>>, body: Result<Bytes, BytesRejection>) -> ApiResult {
    let req: ReshadeRequest = parse_body(body, st.max_upload_bytes)?;
    let s = session(&st, &req.session)?;
    let out = with_session(s, move |s| {
        let nm = s.normals.get(&req.normals_id).ok_or_else(|| ApiError::not_found(format!("normal map {}", req.normals_id)))?;
        shape_reshade(&s.edit, nm).map_err(|e| ApiError::unprocessable(e.to_string()))
    })
    .await?;
    ok(preview(&out))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TransferRequest {
    session: String,
    #[serde(default)]
    rm_id: Option<String>,
    /// Base64 PFM; cells with all-zero radiance count as undefined.
    #[serde(default)]
    rm_pfm: Option<String>,
}

/// Decodes an uploaded square PFM map.
fn decode_upload(b64: &str) -> Result<ReflectanceMap, ApiError> {
    let bytes = B64.decode(b64).map_err(|e| ApiError::unprocessable(format!("rm_pfm is not base64: {e}")))?;
    let f = FloatMap::decode(&bytes).map_err(|e| ApiError::unprocessable(format!("rm_pfm: {e}")))?;
    if f.channels != 3 || f.width != f.height || f.width == 0 {
        return Err(ApiError::unprocessable(format!("rm_pfm must be a square RGB map, got {}x{}x{}", f.width, f.height, f.channels)));
    }
    let r = f.width;
    let mut rm = ReflectanceMap::empty(r);
    for (k, c) in f.data.chunks_exact(3).enumerate() {
        let (i, j) = (k % r, k / r);
        let v = lumisphere::Rgb::new(c[0] as f64, c[1] as f64, c[2] as f64);
        if !v.0.iter().all(|x| x.is_finite() && *x >= 0.0) {
            return Err(ApiError::unprocessable("rm_pfm holds negative or non-finite values"));
        }
        if lumisphere::rmap::cell_in_disc(i, j, r) && v.0.iter().any(|&x| x > 0.0) {
            rm.set(i, j, v);
        }
    }
    if rm.defined_count() == 0 {
        return Err(ApiError::unprocessable("rm_pfm defines no cell"));
    }
    Ok(rm)
}

async fn transfer(State(st): State<Arc<AppState>>, body: Result<Bytes, BytesRejection>) -> ApiResult {
    let req: TransferRequest = parse_body(body, st.max_upload_bytes)?;
    let s = session(&st, &req.session)?;
    let st2 = st.clone();
    let (rid, out) = with_session(s, move |s| {
        let (rid, rm) = match (req.rm_id, req.rm_pfm) {
            (Some(rid), None) => {
                let rm = find_rm(&st2, s, &rid)?;
                (rid, rm)
            }
            (None, Some(b64)) => {
                let rm = decode_upload(&b64)?;
                let rid = s.fresh_id("upload-");
                s.uploads.insert(rid.clone(), rm.clone());
                (rid, rm)
            }
            _ => return Err(ApiError::unprocessable("give exactly one of rm_id and rm_pfm")),
        };
        let out = material_transfer(&s.edit, &rm).map_err(|e| ApiError::unprocessable(e.to_string()))?;
        Ok((rid, out))
    })
    .await?;
    let mut data = preview(&out);
    data["rm_id"] = json!(rid);
    ok(data)
}

async fn fallback() -> ApiError {
    ApiError::not_found("route")
}

pub fn router(state: AppState) -> Router {
    // the explicit check in parse_body reports oversize bodies in the
    // envelope; this limit only bounds buffering
    let limit = DefaultBodyLimit::max(state.max_upload_bytes.saturating_add(1));
    Router::new()
        .route("/health", get(health))
        .route("/session/{id}", get(get_session))
        .route("/session/{id}/image.png", get(image_png))
        .route("/session/{id}/image.pfm", get(image_pfm))
        .route("/session/{id}/normals/{nid}", get(normals_pfm))
        .route("/session/{id}/rm/{rid}", get(rm_pfm))
        .route("/session/{id}/rm/{rid}/sphere.png", get(rm_sphere))
        .route("/paint", post(paint))
        .route("/reshade", post(reshade))
        .route("/transfer", post(transfer))
        .fallback(fallback)
        .layer(limit)
        .with_state(Arc::new(state))
}

pub async fn serve(state: AppState, host: &str, port: u16) -> anyhow::Result<()> {
    let n = state.sessions.len();
    let listener = tokio::net::TcpListener::bind((host, port)).await.with_context(|| format!("binding {host}:{port}"))?;
    eprintln!("listening on http://{} ({n} sessions)", listener.local_addr()?);
    axum::serve(listener, router(state)).await?;
    Ok(())
}

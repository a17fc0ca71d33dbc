//! Endpoint handlers. Each one delegates to a core operation and encodes the
//! result with the same canonical JSON the CLI prints.

use axum::body::Bytes;
use axum::extract::rejection::BytesRejection;
use axum::extract::{FromRequest, Path, Query, Request, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, patch, post};
use axum::{Json, Router};
use pimp_core::analysis::analyze_with_gate;
use pimp_core::io::{export_dot, export_pim_text, to_canonical_json};
use pimp_core::{
    convert, enabled_behaviours, generate_tests, ClickOutcome, Hotspot, HotspotId, HotspotPatch,
    ImageRef, Point, Project, Rect, ScreenId, SimulationSession, TraceEvent,
};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize};

use crate::error::ApiError;
use crate::state::{AppState, Session};

type ApiResult = Result<Response, ApiError>;

pub(crate) fn json_body<T: Serialize>(value: &T) -> Response {
    (
        [(header::CONTENT_TYPE, "application/json")],
        to_canonical_json(value),
    )
        .into_response()
}

fn created<T: Serialize>(value: &T) -> Response {
    (StatusCode::CREATED, json_body(value)).into_response()
}

/// JSON body extractor that reports malformed input and unknown fields as
/// `400 BadRequest` in the usual error envelope.
pub(crate) struct StrictJson<T>(pub T);

impl<S: Send + Sync, T: DeserializeOwned> FromRequest<S> for StrictJson<T> {
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, ApiError> {
        match Json::<T>::from_request(req, state).await {
            Ok(Json(v)) => Ok(Self(v)),
            Err(rejection) => Err(ApiError::bad_request(rejection.body_text())),
        }
    }
}

/// Distinguishes an absent field (`None`) from an explicit `null` (`Some(None)`).
fn double_option<'de, D, T>(d: D) -> Result<Option<Option<T>>, D::Error>
where
    D: Deserializer<'de>,
    T: Deserialize<'de>,
{
    Option::<T>::deserialize(d).map(Some)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NewProject {
    name: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NewScreen {
    name: String,
    /// Content hash of an uploaded image.
    #[serde(default)]
    image: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScreenChange {
    #[serde(default)]
    name: Option<String>,
    #[serde(default, deserialize_with = "double_option")]
    image: Option<Option<String>>,
    #[serde(default)]
    initial: Option<bool>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NewHotspot {
    rect: Rect,
    #[serde(default)]
    name: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct HotspotChange {
    #[serde(default)]
    name: Option<String>,
    #[serde(default)]
    rect: Option<Rect>,
    #[serde(default, deserialize_with = "double_option")]
    link_target: Option<Option<ScreenId>>,
    #[serde(default)]
    s_behaviours: Option<Vec<String>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Click {
    x: f64,
    y: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Step {
    behaviour: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GateQuery {
    gate: Option<String>,
    target: Option<String>,
}

#[derive(Serialize)]
struct ProjectSummary {
    id: String,
    name: String,
    screens: usize,
}

#[derive(Serialize)]
struct Deleted {
    deleted: String,
}

#[derive(Serialize)]
struct ScreenDeleted {
    deleted: ScreenId,
    /// Hotspots whose link pointed at the deleted screen and is now cleared.
    affected_hotspots: Vec<HotspotId>,
}

pub fn router(state: AppState, body_limit: usize) -> Router {
    Router::new()
        .route("/healthz", get(health))
        .route("/projects", post(create_project).get(list_projects))
        .route("/projects/{id}", get(get_project).delete(delete_project))
        .route("/projects/{id}/images", post(upload_image))
        .route("/projects/{id}/images/{hash}", get(get_image))
        .route("/projects/{id}/screens", post(create_screen))
        .route(
            "/projects/{id}/screens/{sid}",
            patch(update_screen).delete(delete_screen),
        )
        .route(
            "/projects/{id}/screens/{sid}/hotspots",
            post(create_hotspot),
        )
        .route(
            "/projects/{id}/screens/{sid}/hotspots/{hid}",
            patch(update_hotspot).delete(delete_hotspot),
        )
        .route("/projects/{id}/convert", post(convert_project))
        .route("/projects/{id}/analysis", get(analysis))
        .route("/projects/{id}/tests", get(tests))
        .route("/projects/{id}/export.dot", get(export_dot_file))
        .route("/projects/{id}/export.pim", get(export_pim_file))
        .route("/projects/{id}/sessions", post(start_session))
        .route("/sessions/{sid}", get(get_session))
        .route("/sessions/{sid}/click", post(click))
        .route("/sessions/{sid}/step", post(step))
        .route("/sessions/{sid}/reset", post(reset))
        .fallback(|| async { ApiError::new(StatusCode::NOT_FOUND, "NotFound", "no such endpoint") })
        .method_not_allowed_fallback(|| async {
            ApiError::new(
                StatusCode::METHOD_NOT_ALLOWED,
                "BadRequest",
                "method not allowed on this endpoint",
            )
        })
        .layer(axum::extract::DefaultBodyLimit::max(body_limit))
        .with_state(state)
}

async fn health() -> Response {
    #[derive(Serialize)]
    struct Health {
        status: &'static str,
    }
    json_body(&Health { status: "ok" })
}

async fn create_project(
    State(state): State<AppState>,
    StrictJson(body): StrictJson<NewProject>,
) -> ApiResult {
    let project = state.create(Project::new(&body.name)?)?;
    Ok(created(&project))
}

async fn list_projects(State(state): State<AppState>) -> ApiResult {
    let mut out = Vec::new();
    for handle in state.list() {
        let p = handle.lock().await;
        out.push(ProjectSummary {
            id: p.id().to_string(),
            name: p.name().to_owned(),
            screens: p.screens().len(),
        });
    }
    Ok(json_body(&out))
}

async fn get_project(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult {
    Ok(json_body(&state.snapshot(&id).await?))
}

async fn delete_project(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult {
    state.delete(&id).await?;
    Ok(json_body(&Deleted { deleted: id }))
}

async fn upload_image(
    State(state): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
    body: Result<Bytes, BytesRejection>,
) -> ApiResult {
    state.handle(&id)?;
    let body = body.map_err(|r| {
        if r.status() == StatusCode::PAYLOAD_TOO_LARGE {
            ApiError::new(
                StatusCode::PAYLOAD_TOO_LARGE,
                "ImageTooLarge",
                r.body_text(),
            )
        } else {
            ApiError::bad_request(r.body_text())
        }
    })?;
    let media_type = headers
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .ok_or_else(|| {
            ApiError::new(
                StatusCode::UNSUPPORTED_MEDIA_TYPE,
                "UnsupportedMediaType",
                "missing Content-Type",
            )
        })?;
    let image = state.images.store_declared(&body, media_type)?;
    Ok(created(&image))
}

async fn get_image(
    State(state): State<AppState>,
    Path((id, hash)): Path<(String, String)>,
) -> ApiResult {
    state.handle(&id)?;
    let image = state.images.lookup(&hash)?;
    let bytes = state.images.fetch(&image)?;
    Ok(([(header::CONTENT_TYPE, image.media_type.mime())], bytes).into_response())
}

fn resolve_image(state: &AppState, hash: Option<&str>) -> Result<Option<ImageRef>, ApiError> {
    hash.map(|h| {
        state
            .images
            .lookup(h)
            .map_err(|e| ApiError::from(e).at("image"))
    })
    .transpose()
}

async fn create_screen(
    State(state): State<AppState>,
    Path(id): Path<String>,
    StrictJson(body): StrictJson<NewScreen>,
) -> ApiResult {
    let image = resolve_image(&state, body.image.as_deref())?;
    let (screen, _) = state
        .mutate(&id, |p| Ok(p.add_screen(&body.name, image)?.clone()))
        .await?;
    Ok(created(&screen))
}

async fn update_screen(
    State(state): State<AppState>,
    Path((id, sid)): Path<(String, String)>,
    StrictJson(body): StrictJson<ScreenChange>,
) -> ApiResult {
    if body.initial == Some(false) {
        return Err(ApiError::bad_request(
            "`initial` can only be set to true; mark another screen instead",
        ));
    }
    let image = match &body.image {
        Some(hash) => Some(resolve_image(&state, hash.as_deref())?),
        None => None,
    };
    let sid = ScreenId::new(sid);
    let (screen, _) = state
        .mutate(&id, |p| {
            if p.screen(&sid).is_none() {
                return Err(pimp_core::ModelError::UnknownScreen { id: sid.clone() }.into());
            }
            if let Some(name) = &body.name {
                p.rename_screen(&sid, name)?;
            }
            if let Some(image) = image {
                p.set_screen_image(&sid, image)?;
            }
            if body.initial == Some(true) {
                p.set_initial_screen(&sid)?;
            }
            Ok(p.screen(&sid).expect("checked above").clone())
        })
        .await?;
    Ok(json_body(&screen))
}

async fn delete_screen(
    State(state): State<AppState>,
    Path((id, sid)): Path<(String, String)>,
) -> ApiResult {
    let sid = ScreenId::new(sid);
    let (affected, _) = state.mutate(&id, |p| Ok(p.delete_screen(&sid)?)).await?;
    Ok(json_body(&ScreenDeleted {
        deleted: sid,
        affected_hotspots: affected,
    }))
}

async fn create_hotspot(
    State(state): State<AppState>,
    Path((id, sid)): Path<(String, String)>,
    StrictJson(body): StrictJson<NewHotspot>,
) -> ApiResult {
    let sid = ScreenId::new(sid);
    let (hotspot, _) = state
        .mutate(&id, |p| {
            Ok(p.add_hotspot(&sid, body.rect, body.name.as_deref())?
                .clone())
        })
        .await?;
    Ok(created(&hotspot))
}

async fn update_hotspot(
    State(state): State<AppState>,
    Path((id, sid, hid)): Path<(String, String, String)>,
    StrictJson(body): StrictJson<HotspotChange>,
) -> ApiResult {
    let (sid, hid) = (ScreenId::new(sid), HotspotId::new(hid));
    let patch = HotspotPatch {
        name: body.name,
        rect: body.rect,
        link_target: body.link_target,
        s_behaviours: body.s_behaviours,
    };
    let (hotspot, _) = state
        .mutate(&id, |p| Ok(p.update_hotspot(&sid, &hid, patch)?.clone()))
        .await?;
    Ok(json_body(&hotspot))
}

async fn delete_hotspot(
    State(state): State<AppState>,
    Path((id, sid, hid)): Path<(String, String, String)>,
) -> ApiResult {
    let (sid, hid) = (ScreenId::new(sid), HotspotId::new(hid));
    let (removed, _) = state
        .mutate(&id, |p| Ok(p.delete_hotspot(&sid, &hid)?))
        .await?;
    Ok(json_body(&removed))
}

async fn convert_project(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult {
    let project = state.snapshot(&id).await?;
    Ok(json_body(&convert(&project)?))
}

async fn analysis(
    State(state): State<AppState>,
    Path(id): Path<String>,
    query: Result<Query<GateQuery>, axum::extract::rejection::QueryRejection>,
) -> ApiResult {
    let Query(q) = query.map_err(|r| ApiError::bad_request(r.body_text()))?;
    let gate = match (&q.gate, &q.target) {
        (Some(g), Some(t)) => Some((g.as_str(), t.as_str())),
        (None, None) => None,
        _ => {
            return Err(ApiError::bad_request(
                "`gate` and `target` must be given together",
            ))
        }
    };
    let project = state.snapshot(&id).await?;
    let conversion = convert(&project)?;
    Ok(json_body(&analyze_with_gate(&conversion, gate)?))
}

async fn tests(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult {
    let project = state.snapshot(&id).await?;
    Ok(json_body(&generate_tests(&convert(&project)?.pim)?))
}

async fn export_dot_file(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult {
    let project = state.snapshot(&id).await?;
    let bytes = export_dot(&convert(&project)?.pim)?;
    Ok((
        [(header::CONTENT_TYPE, "text/vnd.graphviz; charset=utf-8")],
        bytes,
    )
        .into_response())
}

async fn export_pim_file(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult {
    let project = state.snapshot(&id).await?;
    let bytes = export_pim_text(&convert(&project)?.pim)?;
    Ok(([(header::CONTENT_TYPE, "text/plain; charset=utf-8")], bytes).into_response())
}

/// What the viewer needs to draw a session: the current screen and its hit areas.
#[derive(Serialize)]
struct SessionView<'a> {
    id: &'a str,
    project_id: String,
    current_state: &'a str,
    screen: ScreenView<'a>,
    enabled_behaviours: Vec<String>,
    trace: &'a [TraceEvent],
}

#[derive(Serialize)]
struct ScreenView<'a> {
    id: &'a ScreenId,
    name: &'a str,
    image: Option<&'a ImageRef>,
    hotspots: &'a [Hotspot],
}

fn session_view(s: &SimulationSession) -> SessionView<'_> {
    let screen = s.current_screen();
    SessionView {
        id: s.id(),
        project_id: s.project().id().to_string(),
        current_state: s.current(),
        screen: ScreenView {
            id: &screen.id,
            name: &screen.name,
            image: screen.image.as_ref(),
            hotspots: &screen.hotspots,
        },
        enabled_behaviours: enabled_behaviours(s.pim(), s.current()).unwrap_or_default(),
        trace: s.trace(),
    }
}

async fn start_session(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult {
    let project = state.snapshot(&id).await?;
    let session = SimulationSession::start_shared(std::sync::Arc::new(project))?;
    let entry = state.add_session(session);
    let guard = entry.lock().expect("session entry lock");
    Ok(created(&session_view(&guard.session)))
}

fn with_session<T: Serialize>(
    state: &AppState,
    sid: &str,
    f: impl FnOnce(&mut SimulationSession) -> Result<T, ApiError>,
) -> ApiResult {
    #[derive(Serialize)]
    struct Out<'a, T> {
        result: T,
        session: SessionView<'a>,
    }
    let entry = state.session(sid)?;
    let mut guard = entry.lock().expect("session entry lock");
    let Session { session, last_used } = &mut *guard;
    *last_used = std::time::Instant::now();
    let result = f(session)?;
    Ok(json_body(&Out {
        result,
        session: session_view(session),
    }))
}

async fn get_session(State(state): State<AppState>, Path(sid): Path<String>) -> ApiResult {
    let entry = state.session(&sid)?;
    let mut guard = entry.lock().expect("session entry lock");
    guard.last_used = std::time::Instant::now();
    Ok(json_body(&session_view(&guard.session)))
}

async fn click(
    State(state): State<AppState>,
    Path(sid): Path<String>,
    StrictJson(body): StrictJson<Click>,
) -> ApiResult {
    with_session(&state, &sid, |s| -> Result<ClickOutcome, ApiError> {
        Ok(s.click(Point {
            x: body.x,
            y: body.y,
        })?)
    })
}

async fn step(
    State(state): State<AppState>,
    Path(sid): Path<String>,
    StrictJson(body): StrictJson<Step>,
) -> ApiResult {
    with_session(&state, &sid, |s| Ok(s.step(&body.behaviour)?.clone()))
}

async fn reset(State(state): State<AppState>, Path(sid): Path<String>) -> ApiResult {
    with_session(&state, &sid, |s| Ok(s.reset().clone()))
}

//! JSON API over an in-memory scene registry.
//!
//! Each scene holds an immutable snapshot (document, BVH, revision). Reads
//! clone the current snapshot and render without holding a lock; edits
//! replace the snapshot under the scene's write lock after checking the
//! caller's revision. Renders run on the blocking pool and are bounded by the
//! 256 x 256 cell cap per map request.

use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use rfsplat::bvh::{build_bvh, Bvh};
use rfsplat::formats::{parse_scene, AntennaRecord, SceneDocument};
use rfsplat::render::{export_attribute_maps, AttributeKind, LosConfig, RadarPattern};
use rfsplat::FrequencyGrid;
use serde::{Deserialize, Serialize};

use crate::commands::ServeArgs;
use crate::error::{is_input_error, CliError};
use crate::payload::{
    map_response, parse_grid, rcs_response, resolve_antenna, sweep_angles, MapRequest, DEFAULT_THRESHOLD_DB,
};

/// An immutable view of a scene at one revision.
pub struct Snapshot {
    pub doc: SceneDocument,
    pub bvh: Arc<Bvh>,
    pub revision: u64,
}

#[derive(Default)]
pub struct Registry {
    scenes: RwLock<BTreeMap<String, Arc<RwLock<Arc<Snapshot>>>>>,
    next: AtomicU64,
}

impl Registry {
    /// Registers a scene and returns its id (`scene-1`, `scene-2`, …).
    pub fn insert(&self, doc: SceneDocument) -> String {
        let id = format!("scene-{}", self.next.fetch_add(1, Ordering::SeqCst) + 1);
        let bvh = Arc::new(build_bvh(&doc.scene));
        let snapshot = Arc::new(Snapshot { doc, bvh, revision: 1 });
        self.scenes
            .write()
            .expect("registry lock")
            .insert(id.clone(), Arc::new(RwLock::new(snapshot)));
        id
    }

    fn slot(&self, id: &str) -> Result<Arc<RwLock<Arc<Snapshot>>>, ApiError> {
        self.scenes
            .read()
            .expect("registry lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("unknown scene '{id}'")))
    }

    pub fn snapshot(&self, id: &str) -> Result<Arc<Snapshot>, ApiError> {
        Ok(self.slot(id)?.read().expect("scene lock").clone())
    }
}

pub type AppState = Arc<Registry>;

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }

    fn invalid(message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, message)
    }
}

impl From<rfsplat::Error> for ApiError {
    fn from(e: rfsplat::Error) -> Self {
        let status = if is_input_error(&e) {
            StatusCode::UNPROCESSABLE_ENTITY
        } else {
            StatusCode::INTERNAL_SERVER_ERROR
        };
        Self::new(status, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(serde_json::json!({ "error": self.message }))).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/scene", post(load_scene))
        .route("/scene/{id}", get(scene_summary))
        .route("/scene/{id}/antenna", post(edit_antenna))
        .route("/scene/{id}/map", get(map))
        .route("/scene/{id}/rcs", get(rcs))
        .route("/scene/{id}/attributes", get(attributes))
        .with_state(state)
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> ApiResult<T> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
}

#[derive(Serialize, Deserialize)]
pub struct Created {
    pub id: String,
    pub revision: u64,
}

async fn load_scene(State(state): State<AppState>, body: Bytes) -> ApiResult<(StatusCode, Json<Created>)> {
    let text = std::str::from_utf8(&body).map_err(|_| ApiError::invalid("scene body is not UTF-8"))?;
    let doc = parse_scene(text)?;
    let id = state.insert(doc);
    Ok((StatusCode::CREATED, Json(Created { id, revision: 1 })))
}

#[derive(Serialize, Deserialize)]
pub struct Bounds {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

#[derive(Serialize, Deserialize)]
pub struct SceneSummary {
    pub id: String,
    pub name: String,
    pub revision: u64,
    pub gaussians: usize,
    pub geometry_frozen: bool,
    pub bounds: Bounds,
    pub frequency_grid: Vec<f64>,
    pub antennas: Vec<AntennaRecord>,
    pub los: Option<LosConfig>,
}

async fn scene_summary(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<SceneSummary>> {
    let snap = state.snapshot(&id)?;
    let b = snap.doc.scene.bounds();
    Ok(Json(SceneSummary {
        id,
        name: snap.doc.id.clone(),
        revision: snap.revision,
        gaussians: snap.doc.scene.len(),
        geometry_frozen: snap.doc.scene.geometry_frozen(),
        bounds: Bounds {
            min: [b.min.x, b.min.y, b.min.z],
            max: [b.max.x, b.max.y, b.max.z],
        },
        frequency_grid: snap.doc.grid.samples().to_vec(),
        antennas: snap.doc.antennas.iter().map(AntennaRecord::from_named).collect(),
        los: snap.doc.los,
    }))
}

/// Moves or adds an antenna preset. `revision` must equal the scene's
/// current revision.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AntennaEdit {
    pub revision: u64,
    #[serde(flatten)]
    pub antenna: AntennaRecord,
}

#[derive(Serialize, Deserialize)]
pub struct Revision {
    pub revision: u64,
}

async fn edit_antenna(State(state): State<AppState>, Path(id): Path<String>, body: Bytes) -> ApiResult<Json<Revision>> {
    let slot = state.slot(&id)?;
    let edit: AntennaEdit =
        serde_json::from_slice(&body).map_err(|e| ApiError::invalid(format!("invalid antenna edit: {e}")))?;
    let named = edit.antenna.into_named()?;
    let mut guard = slot.write().expect("scene lock");
    if guard.revision != edit.revision {
        return Err(ApiError::new(
            StatusCode::CONFLICT,
            format!(
                "revision {} is stale; the scene is at revision {}",
                edit.revision, guard.revision
            ),
        ));
    }
    let mut doc = guard.doc.clone();
    match doc.antennas.iter_mut().find(|a| a.name == named.name) {
        Some(existing) => *existing = named,
        None => doc.antennas.push(named),
    }
    let revision = guard.revision + 1;
    *guard = Arc::new(Snapshot {
        doc,
        bvh: guard.bvh.clone(),
        revision,
    });
    Ok(Json(Revision { revision }))
}

fn param<'a>(q: &'a HashMap<String, String>, key: &str) -> ApiResult<&'a str> {
    q.get(key)
        .map(String::as_str)
        .ok_or_else(|| ApiError::invalid(format!("missing query parameter '{key}'")))
}

fn number(q: &HashMap<String, String>, key: &str) -> ApiResult<Option<f64>> {
    q.get(key)
        .map(|v| {
            v.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| ApiError::invalid(format!("query parameter '{key}' is not a finite number")))
        })
        .transpose()
}

fn flag(q: &HashMap<String, String>, key: &str) -> bool {
    q.get(key).is_some_and(|v| v == "true" || v == "1")
}

/// `GET /scene/{id}/map?tx=NAME|x,y,z&grid=HxW[&freq=Hz][&z=m][&threshold_db=dB][&exact=true]`
async fn map(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<HashMap<String, String>>,
) -> ApiResult<Response> {
    let snap = state.snapshot(&id)?;
    let (height, width) = parse_grid(param(&q, "grid")?)?;
    let tx = resolve_antenna(&snap.doc, param(&q, "tx")?)?;
    let request = MapRequest {
        tx,
        height,
        width,
        frequency: number(&q, "freq")?.unwrap_or(snap.doc.grid.samples()[0]),
        z: number(&q, "z")?,
        threshold_db: number(&q, "threshold_db")?.unwrap_or(DEFAULT_THRESHOLD_DB),
        exact: flag(&q, "exact"),
    };
    let body = blocking(move || {
        let (response, _) = map_response(&snap.doc, &snap.bvh, &request)?;
        serde_json::to_vec(&response).map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))
    })
    .await?;
    Ok(([(axum::http::header::CONTENT_TYPE, "application/json")], body).into_response())
}

/// `GET /scene/{id}/rcs?range=m[&freq=Hz][&step_deg=deg][&pattern=horn|omni][&exact=true]`
async fn rcs(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<HashMap<String, String>>,
) -> ApiResult<Json<crate::payload::RcsResponse>> {
    let snap = state.snapshot(&id)?;
    let range = number(&q, "range")?.ok_or_else(|| ApiError::invalid("missing query parameter 'range'"))?;
    let grid = match number(&q, "freq")? {
        Some(f) => FrequencyGrid::single(f)?,
        None => snap.doc.grid.clone(),
    };
    let angles = sweep_angles(number(&q, "step_deg")?.unwrap_or(1.0))?;
    let pattern = match q.get("pattern").map(String::as_str) {
        None | Some("horn") => RadarPattern::Horn,
        Some("omni") => RadarPattern::Omni,
        Some(other) => return Err(ApiError::invalid(format!("unknown pattern '{other}'"))),
    };
    let exact = flag(&q, "exact");
    let response = blocking(move || {
        Ok(rcs_response(
            &snap.doc, &snap.bvh, range, angles, pattern, &grid, exact,
        )?)
    })
    .await?;
    Ok(Json(response))
}

#[derive(Serialize, Deserialize)]
pub struct AttributeMapResponse {
    pub kind: AttributeKind,
    /// Elevation cells.
    pub height: usize,
    /// Azimuth cells.
    pub width: usize,
    pub step_deg: f64,
    /// Row-major; `null` where no Gaussian is seen.
    pub values: Vec<Option<f64>>,
    pub weight: Vec<f64>,
}

/// `GET /scene/{id}/attributes?kind=gamma_mag|gamma_phase|roughness[&rx=NAME|x,y,z][&step_deg=deg]`
///
/// Without `rx`, the first receiver preset (or else the first antenna) is used.
async fn attributes(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<HashMap<String, String>>,
) -> ApiResult<Json<AttributeMapResponse>> {
    let snap = state.snapshot(&id)?;
    let kind: AttributeKind = param(&q, "kind")?.parse()?;
    let rx = match q.get("rx") {
        Some(spec) => resolve_antenna(&snap.doc, spec)?,
        None => snap
            .doc
            .antennas
            .iter()
            .find(|a| a.role == rfsplat::formats::AntennaRole::Rx)
            .or(snap.doc.antennas.first())
            .map(|a| a.antenna.clone())
            .ok_or_else(|| ApiError::invalid("scene has no antenna; pass rx=x,y,z"))?,
    };
    let step = number(&q, "step_deg")?.unwrap_or(1.0);
    let maps = blocking(move || Ok(export_attribute_maps(&snap.doc.scene, &snap.bvh, &rx, step)?)).await?;
    Ok(Json(AttributeMapResponse {
        kind,
        height: maps.height,
        width: maps.width,
        step_deg: step,
        values: maps.get(kind).iter().map(|v| v.is_finite().then_some(*v)).collect(),
        weight: maps.weight,
    }))
}

/// Loads every `*.json` scene in `dir`, in file-name order.
pub fn load_directory(registry: &Registry, dir: &std::path::Path) -> Result<Vec<(String, String)>, CliError> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| CliError::usage(format!("cannot read scene directory {}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    let mut loaded = Vec::new();
    for p in paths {
        let doc = rfsplat::formats::read_scene(&p).map_err(|e| CliError::usage(format!("{}: {e}", p.display())))?;
        loaded.push((registry.insert(doc), p.display().to_string()));
    }
    Ok(loaded)
}

pub fn serve(args: &ServeArgs) -> Result<(), CliError> {
    let registry = Arc::new(Registry::default());
    if let Some(dir) = &args.scene_dir {
        for (id, path) in load_directory(&registry, dir)? {
            println!("loaded {path} as {id}");
        }
    }
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::failure(e.to_string()))?;
    runtime.block_on(async {
        let addr = format!("{}:{}", args.host, args.port);
        let listener = tokio::net::TcpListener::bind(&addr)
            .await
            .map_err(|e| CliError::usage(format!("cannot bind {addr}: {e}")))?;
        println!("listening on http://{addr}");
        axum::serve(listener, router(registry))
            .await
            .map_err(|e| CliError::failure(e.to_string()))
    })
}

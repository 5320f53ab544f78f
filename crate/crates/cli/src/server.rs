//! HTTP API for interactive tuning.
//!
//! Detections and phantoms are kept in a bounded in-memory run store and
//! referenced by run id; systems are shared through a [`LayeredCache`].

use std::collections::{HashMap, VecDeque};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};
use std::time::Instant;

use axum::extract::multipart::MultipartRejection;
use axum::extract::rejection::JsonRejection;
use axum::extract::{DefaultBodyLimit, Multipart, Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use coshrem::phantoms::generate;
use coshrem::pipeline::{Detection, Detector, DetectorConfig};
use coshrem::{GrayImage, MeasureKind};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::bench::{builtin_phantom, Cell};
use crate::io;
use crate::render::{render_layer, DetectionStats, Layer, Timings};
use crate::schema::{check_ranges, schema};
use crate::syscache::LayeredCache;

/// Largest accepted request body.
pub const BODY_LIMIT: usize = 64 << 20;
/// Runs kept before the oldest is forgotten.
pub const RUN_CAPACITY: usize = 64;

/// Error body `{code, message, field?}` with its status.
#[derive(Debug, Clone)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
    pub field: Option<String>,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
            field: None,
        }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }

    fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: Some(field.into()),
            ..Self::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_parameter", message)
        }
    }

    fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = json!({"code": self.code, "message": self.message});
        if let Some(field) = self.field {
            body["field"] = Value::String(field);
        }
        (self.status, Json(body)).into_response()
    }
}

impl From<coshrem::Error> for ApiError {
    fn from(e: coshrem::Error) -> Self {
        match &e {
            coshrem::Error::InvalidParameter { field, .. } => ApiError::invalid(*field, e.to_string()),
            coshrem::Error::ImageTooSmall { .. } | coshrem::Error::NonFinite { .. } => {
                ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_image", e.to_string())
            }
            coshrem::Error::InvalidPhantom(_) => ApiError::invalid("spec", e.to_string()),
            _ => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()),
        }
    }
}

impl From<io::ImageIoError> for ApiError {
    fn from(e: io::ImageIoError) -> Self {
        match e {
            io::ImageIoError::Image(inner) => inner.into(),
            io::ImageIoError::PngEncode(_) | io::ImageIoError::Io { .. } => {
                ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string())
            }
            other => ApiError {
                field: Some("image".into()),
                ..ApiError::new(StatusCode::UNSUPPORTED_MEDIA_TYPE, "unsupported_image", other.to_string())
            },
        }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError::bad_request(e.body_text())
    }
}

impl From<MultipartRejection> for ApiError {
    fn from(e: MultipartRejection) -> Self {
        ApiError::bad_request(e.body_text())
    }
}

enum Run {
    Phantom(Arc<GrayImage>),
    Detection {
        image: Arc<GrayImage>,
        detection: Arc<Detection>,
    },
}

#[derive(Default)]
struct RunStore {
    runs: HashMap<String, Run>,
    order: VecDeque<String>,
}

/// Shared service state.
pub struct AppState {
    cache: LayeredCache,
    runs: RwLock<RunStore>,
    counter: AtomicU64,
    nonce: u64,
}

impl AppState {
    pub fn new(cache: LayeredCache) -> Self {
        let nonce = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_nanos() as u64)
            .unwrap_or(0);
        Self {
            cache,
            runs: RwLock::new(RunStore::default()),
            counter: AtomicU64::new(0),
            nonce,
        }
    }

    fn store(&self, run: Run) -> String {
        let n = self.counter.fetch_add(1, Ordering::Relaxed);
        let id = format!("{:08x}-{n}", self.nonce & 0xffff_ffff);
        let mut store = self.runs.write().unwrap_or_else(|e| e.into_inner());
        if store.order.len() >= RUN_CAPACITY {
            if let Some(old) = store.order.pop_front() {
                store.runs.remove(&old);
            }
        }
        store.order.push_back(id.clone());
        store.runs.insert(id.clone(), run);
        id
    }

    fn phantom_image(&self, id: &str) -> Result<Arc<GrayImage>, ApiError> {
        let store = self.runs.read().unwrap_or_else(|e| e.into_inner());
        match store.runs.get(id) {
            Some(Run::Phantom(img)) | Some(Run::Detection { image: img, .. }) => Ok(img.clone()),
            None => Err(ApiError {
                field: Some("imageRef".into()),
                ..ApiError::not_found(format!("run `{id}` does not exist or has expired"))
            }),
        }
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/params/schema", get(get_schema))
        .route("/api/detect", post(post_detect))
        .route("/api/result/{run_id}/{layer}", get(get_result))
        .route("/api/phantom", post(post_phantom))
        .layer(DefaultBodyLimit::max(BODY_LIMIT))
        .with_state(state)
}

/// Binds `addr` and serves until the process ends.
pub async fn serve(addr: &str, state: Arc<AppState>) -> anyhow::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|e| anyhow::anyhow!("cannot bind {addr}: {e}"))?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state)).await?;
    Ok(())
}

async fn get_schema() -> Json<Value> {
    Json(serde_json::to_value(schema()).expect("serializable"))
}

/// Overlays the keys of `patch` on `base`, rejecting keys `base` lacks.
fn merge(base: &mut Value, patch: &Value, section: &str) -> Result<(), ApiError> {
    let Some(patch) = patch.as_object() else {
        return Err(ApiError::invalid(section, format!("`{section}` must be an object")));
    };
    let base = base.as_object_mut().expect("config sections are objects");
    for (k, v) in patch {
        match base.get_mut(k) {
            Some(slot) => *slot = v.clone(),
            None => return Err(ApiError::invalid(k.clone(), format!("unknown parameter `{section}.{k}`"))),
        }
    }
    Ok(())
}

/// Builds a config from `{mode, system?, detection?, thresholds?}`; missing
/// values take the mode's defaults.
pub fn config_from_params(params: &Value) -> Result<DetectorConfig, ApiError> {
    let obj: &Map<String, Value> = params
        .as_object()
        .ok_or_else(|| ApiError::invalid("params", "params must be a JSON object"))?;
    let mode: MeasureKind = match obj.get("mode") {
        None => MeasureKind::Edge,
        Some(m) => serde_json::from_value(m.clone())
            .map_err(|_| ApiError::invalid("mode", "mode must be `edge` or `ridge`"))?,
    };
    let mut config = serde_json::to_value(DetectorConfig::default_for(mode)).expect("serializable");
    for (key, value) in obj {
        match key.as_str() {
            "mode" => {}
            "system" | "detection" | "thresholds" => merge(&mut config[key.as_str()], value, key)?,
            other => return Err(ApiError::invalid(other, format!("unknown params key `{other}`"))),
        }
    }
    let config: DetectorConfig = serde_json::from_value(config)
        .map_err(|e| ApiError::invalid("params", format!("malformed parameter: {e}")))?;
    check_ranges(&config).map_err(|e| ApiError::invalid(e.field, e.message))?;
    config.validate()?;
    Ok(config)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DetectResponse {
    pub run_id: String,
    pub mode: MeasureKind,
    pub stats: DetectionStats,
    pub cache_hit: bool,
    pub cache_key: String,
    pub timings: Timings,
}

async fn post_detect(
    State(state): State<Arc<AppState>>,
    multipart: Result<Multipart, MultipartRejection>,
) -> Result<Json<DetectResponse>, ApiError> {
    let mut multipart = multipart?;
    let mut image: Option<Arc<GrayImage>> = None;
    let mut params = Value::Object(Map::new());
    while let Some(field) = multipart
        .next_field()
        .await
        .map_err(|e| ApiError::bad_request(e.body_text()))?
    {
        let name = field.name().unwrap_or_default().to_string();
        match name.as_str() {
            "image" => {
                let bytes = field.bytes().await.map_err(|e| ApiError::bad_request(e.body_text()))?;
                image = Some(Arc::new(io::decode_gray(&bytes)?));
            }
            "imageRef" => {
                let id = field.text().await.map_err(|e| ApiError::bad_request(e.body_text()))?;
                image = Some(state.phantom_image(id.trim())?);
            }
            "params" => {
                let text = field.text().await.map_err(|e| ApiError::bad_request(e.body_text()))?;
                params = serde_json::from_str(&text)
                    .map_err(|e| ApiError::invalid("params", format!("params is not valid JSON: {e}")))?;
            }
            other => return Err(ApiError::invalid(other, format!("unexpected form field `{other}`"))),
        }
    }
    let image = image.ok_or_else(|| ApiError::invalid("image", "an `image` file or `imageRef` is required"))?;
    let config = config_from_params(&params)?;
    let worker = state.clone();
    let job_image = image.clone();
    let outcome = tokio::task::spawn_blocking(move || {
        let start = Instant::now();
        let (system, lookup) = worker
            .cache
            .get_or_build(config.system, job_image.width(), job_image.height())?;
        let mode = config.mode;
        let detection = Detector::with_system(config, system.clone())?.detect(&job_image)?;
        let total = start.elapsed().as_secs_f64() * 1e3;
        Ok::<_, coshrem::Error>((mode, system.cache_key().to_string(), lookup, detection, total))
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?;
    let (mode, cache_key, lookup, detection, total_ms) = outcome?;
    let response = DetectResponse {
        run_id: String::new(),
        mode,
        stats: DetectionStats::of(&detection),
        cache_hit: lookup.hit,
        cache_key,
        timings: Timings::new(&lookup, detection.detect_ms, total_ms),
    };
    let run_id = state.store(Run::Detection {
        image,
        detection: Arc::new(detection),
    });
    Ok(Json(DetectResponse { run_id, ..response }))
}

async fn get_result(
    State(state): State<Arc<AppState>>,
    Path((run_id, layer)): Path<(String, String)>,
) -> Result<Response, ApiError> {
    let layer: Layer = layer.parse().map_err(|m: String| ApiError {
        field: Some("layer".into()),
        ..ApiError::not_found(m)
    })?;
    let (image, detection) = {
        let store = state.runs.read().unwrap_or_else(|e| e.into_inner());
        match store.runs.get(&run_id) {
            Some(Run::Detection { image, detection }) => (image.clone(), detection.clone()),
            Some(Run::Phantom(_)) => {
                return Err(ApiError::new(
                    StatusCode::CONFLICT,
                    "no_detection",
                    format!("run `{run_id}` is a phantom; POST it to /api/detect first"),
                ))
            }
            None => return Err(ApiError::not_found(format!("run `{run_id}` does not exist or has expired"))),
        }
    };
    let png = tokio::task::spawn_blocking(move || render_layer(&image, &detection, layer))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))??;
    Ok(([(header::CONTENT_TYPE, "image/png")], png).into_response())
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct PhantomRequestBody {
    /// `edge-512` or `ridge-512`; ignored when `spec` is present.
    #[serde(default)]
    pub preset: Option<String>,
    #[serde(default)]
    pub spec: Option<coshrem::phantoms::PhantomSpec>,
    #[serde(default)]
    pub blur: f64,
    #[serde(default)]
    pub noise: f64,
    #[serde(default)]
    pub poisson: bool,
    #[serde(default)]
    pub seed: u64,
}

async fn post_phantom(
    State(state): State<Arc<AppState>>,
    body: Result<Json<PhantomRequestBody>, JsonRejection>,
) -> Result<Json<Value>, ApiError> {
    let Json(body) = body?;
    let spec = match (&body.spec, &body.preset) {
        (Some(spec), _) => spec.clone(),
        (None, Some(name)) => builtin_phantom(name).map_err(|e| ApiError::invalid("preset", e.to_string()))?,
        (None, None) => return Err(ApiError::invalid("spec", "either `spec` or `preset` is required")),
    };
    let cell = Cell {
        blur: body.blur,
        noise: body.noise,
        poisson: body.poisson,
        seed: body.seed,
    };
    let (image, truth_pixels) = tokio::task::spawn_blocking(move || {
        let (clean, truth) = generate(&spec)?;
        Ok::<_, coshrem::Error>((cell.corrupt(&clean)?, truth.curves.count_on()))
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))??;
    let (width, height) = image.dims();
    let run_id = state.store(Run::Phantom(Arc::new(image)));
    Ok(Json(json!({
        "runId": run_id,
        "width": width,
        "height": height,
        "truthPixels": truth_pixels,
    })))
}

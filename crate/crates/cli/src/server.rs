//! Read-only HTTP API over registered slices: tiles, point diagnostics,
//! curve lifts and per-slice value ranges.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::{Arc, RwLock};

use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use dashmap::DashMap;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use skewprod::io::FieldMeta;
use skewprod::topology::MAX_LIFT_STEPS;
use skewprod::{BaseQuadratic, ComplexLineSlice, Cx, Error, SkewParams};

use crate::config::{parse_cx, JobConfig};
use crate::probe::{lift_report, point_report};
use crate::render::{encode, render, RenderQuantity, TILE_SIZE};

/// Deepest zoom served.
pub const MAX_ZOOM: u32 = 40;

#[derive(Debug)]
pub struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(serde_json::json!({ "error": self.1 }))).into_response()
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidArgument(_) | Error::NonFinite(_) | Error::EmptySamples => StatusCode::BAD_REQUEST,
            Error::Io(_) | Error::Json(_) => StatusCode::INTERNAL_SERVER_ERROR,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        ApiError(code, e.to_string())
    }
}

fn bad(msg: impl Into<String>) -> ApiError {
    ApiError(StatusCode::BAD_REQUEST, msg.into())
}

type ApiResult<T> = Result<T, ApiError>;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SliceDescriptor {
    pub name: String,
    pub slice: ComplexLineSlice,
}

/// Shared state. Only the caches and the slice registry change after start.
pub struct AppState {
    pub config: JobConfig,
    pub config_hash: String,
    slices: RwLock<BTreeMap<String, ComplexLineSlice>>,
    tiles: DashMap<String, Arc<Vec<u8>>>,
    ranges: DashMap<String, FieldMeta>,
    cache_dir: Option<PathBuf>,
}

impl AppState {
    /// Registers the configured slice as `default`.
    pub fn new(config: JobConfig) -> Self {
        let mut slices = BTreeMap::new();
        slices.insert("default".to_string(), config.slice());
        Self {
            config_hash: config.hash(),
            cache_dir: config.cache_dir.clone(),
            config,
            slices: RwLock::new(slices),
            tiles: DashMap::new(),
            ranges: DashMap::new(),
        }
    }

    fn slice(&self, name: &str) -> ApiResult<ComplexLineSlice> {
        self.slices
            .read()
            .expect("slice registry poisoned")
            .get(name)
            .cloned()
            .ok_or_else(|| ApiError(StatusCode::NOT_FOUND, format!("no slice named `{name}`")))
    }

    fn key(&self, slice: &ComplexLineSlice, q: &RenderQuantity, tile: &str) -> String {
        let mut h = Sha256::new();
        h.update(self.config_hash.as_bytes());
        h.update(serde_json::to_vec(slice).expect("slice serialises"));
        h.update(q.key().as_bytes());
        h.update(tile.as_bytes());
        hex::encode(h.finalize())
    }

    fn cached(&self, key: &str) -> Option<Arc<Vec<u8>>> {
        if let Some(b) = self.tiles.get(key) {
            return Some(b.clone());
        }
        let path = self.cache_dir.as_ref()?.join(format!("{key}.pgm"));
        let bytes = Arc::new(std::fs::read(path).ok()?);
        self.tiles.insert(key.to_string(), bytes.clone());
        Some(bytes)
    }

    fn store(&self, key: &str, bytes: Vec<u8>) -> Arc<Vec<u8>> {
        if let Some(dir) = &self.cache_dir {
            // write then rename so concurrent readers never see a partial file
            let tmp = dir.join(format!("{key}.{:?}.tmp", std::thread::current().id()));
            if std::fs::create_dir_all(dir).is_ok() && std::fs::write(&tmp, &bytes).is_ok() {
                let _ = std::fs::rename(&tmp, dir.join(format!("{key}.pgm")));
            }
        }
        let bytes = Arc::new(bytes);
        self.tiles.insert(key.to_string(), bytes.clone());
        bytes
    }

    /// Range of `q` over the zoom-0 tile; the zoom-0 tile is cached alongside.
    fn range(&self, slice: &ComplexLineSlice, q: &RenderQuantity) -> skewprod::Result<Option<FieldMeta>> {
        if q.is_mask() {
            return Ok(None);
        }
        let rkey = self.key(slice, q, "range");
        if let Some(m) = self.ranges.get(&rkey) {
            return Ok(Some(m.clone()));
        }
        let top = slice.tile(0, 0, 0, TILE_SIZE)?;
        let r = render(&top, q, self.config.estimator(), self.config.budget)?;
        let (bytes, meta) = encode(&r, None)?;
        let meta = meta.expect("fields carry metadata");
        self.store(&self.key(slice, q, "0/0/0"), bytes);
        self.ranges.insert(rkey, meta.clone());
        Ok(Some(meta))
    }

    /// The tile as PGM bytes, normalised by the slice-wide range.
    pub fn tile(&self, name: &str, q: &RenderQuantity, zoom: u32, x: u32, y: u32) -> ApiResult<Arc<Vec<u8>>> {
        if zoom > MAX_ZOOM {
            return Err(bad(format!("zoom {zoom} above {MAX_ZOOM}")));
        }
        let slice = self.slice(name)?;
        let key = self.key(&slice, q, &format!("{zoom}/{x}/{y}"));
        if let Some(b) = self.cached(&key) {
            return Ok(b);
        }
        let sub = slice.tile(zoom, x, y, TILE_SIZE)?;
        let meta = self.range(&slice, q)?;
        if let Some(b) = self.cached(&key) {
            return Ok(b);
        }
        let r = render(&sub, q, self.config.estimator(), self.config.budget)?;
        let (bytes, _) = encode(&r, meta.map(|m| (m.min, m.max)))?;
        Ok(self.store(&key, bytes))
    }
}

#[derive(Debug, Deserialize)]
pub struct QuantityQuery {
    /// Read by `/api/meta` only; tiles name their slice in the path.
    #[serde(default = "default_slice")]
    pub slice: String,
    #[serde(default = "default_quantity")]
    pub quantity: String,
    pub z: Option<String>,
    pub n: Option<u32>,
    pub eta: Option<String>,
}

fn default_quantity() -> String {
    "lv".into()
}

impl QuantityQuery {
    fn parse(&self, cfg: &JobConfig) -> ApiResult<RenderQuantity> {
        let cx = |s: &Option<String>, default: Cx| s.as_deref().map_or(Ok(default), parse_cx).map_err(bad);
        let z = cx(&self.z, cfg.probes()[0])?;
        let eta = cx(&self.eta, Cx::new(0.0, 0.0))?;
        let n = self.n.unwrap_or(cfg.periodic_n);
        Ok(match self.quantity.as_str() {
            "lv" => RenderQuantity::Lv,
            "ddc_lv" => RenderQuantity::DdcLv,
            "green" => RenderQuantity::Green { z },
            "bz" => RenderQuantity::Bz { z },
            "pern" => RenderQuantity::Pern { n, eta },
            "ddc_pern" => RenderQuantity::DdcPern { n, eta },
            other => return Err(bad(format!("unknown quantity `{other}`"))),
        })
    }
}

async fn blocking<T, F>(f: F) -> ApiResult<T>
where
    F: FnOnce() -> ApiResult<T> + Send + 'static,
    T: Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
}

type Shared = State<Arc<AppState>>;

async fn list_slices(State(st): Shared) -> Json<Vec<SliceDescriptor>> {
    let map = st.slices.read().expect("slice registry poisoned");
    Json(
        map.iter()
            .map(|(name, slice)| SliceDescriptor {
                name: name.clone(),
                slice: slice.clone(),
            })
            .collect(),
    )
}

async fn add_slice(
    State(st): Shared,
    Json(d): Json<SliceDescriptor>,
) -> ApiResult<(StatusCode, Json<SliceDescriptor>)> {
    if d.name.is_empty()
        || !d
            .name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
    {
        return Err(bad("slice names use [A-Za-z0-9_-]"));
    }
    d.slice.validate()?;
    st.slices
        .write()
        .expect("slice registry poisoned")
        .insert(d.name.clone(), d.slice.clone());
    Ok((StatusCode::CREATED, Json(d)))
}

async fn tile(
    State(st): Shared,
    Path((slice, zoom, x, y)): Path<(String, u32, u32, u32)>,
    Query(q): Query<QuantityQuery>,
) -> ApiResult<Response> {
    let q = q.parse(&st.config)?;
    let bytes = blocking(move || st.tile(&slice, &q, zoom, x, y)).await?;
    Ok((
        [(header::CONTENT_TYPE, "image/x-portable-graymap")],
        bytes.as_ref().clone(),
    )
        .into_response())
}

fn default_slice() -> String {
    "default".into()
}

#[derive(Debug, Serialize)]
pub struct MetaResponse {
    pub slice: String,
    pub quantity: RenderQuantity,
    pub config_hash: String,
    pub tile_size: usize,
    pub max_zoom: u32,
    pub field: Option<FieldMeta>,
}

async fn meta(State(st): Shared, Query(mq): Query<QuantityQuery>) -> ApiResult<Json<MetaResponse>> {
    let q = mq.parse(&st.config)?;
    let slice = st.slice(&mq.slice)?;
    let st2 = st.clone();
    let q2 = q.clone();
    let field = blocking(move || Ok(st2.range(&slice, &q2)?)).await?;
    Ok(Json(MetaResponse {
        slice: mq.slice,
        quantity: q,
        config_hash: st.config_hash.clone(),
        tile_size: TILE_SIZE,
        max_zoom: MAX_ZOOM,
        field,
    }))
}

#[derive(Debug, Deserialize)]
pub struct PointQuery {
    #[serde(default = "default_slice")]
    pub slice: String,
    pub s_re: f64,
    pub s_im: f64,
    pub eta: Option<String>,
}

async fn point(State(st): Shared, Query(pq): Query<PointQuery>) -> ApiResult<Response> {
    let slice = st.slice(&pq.slice)?;
    let s = Cx::new(pq.s_re, pq.s_im);
    if !(s.re.is_finite() && s.im.is_finite()) {
        return Err(bad("s must be finite"));
    }
    let eta = pq.eta.as_deref().map_or(Ok(Cx::new(0.0, 0.0)), parse_cx).map_err(bad)?;
    let report = blocking(move || Ok(point_report(&st.config, &slice, s, eta)?)).await?;
    Ok(Json(report).into_response())
}

/// Either a slice point (`slice`, `s_re`, `s_im`) or explicit `a`, `b`, `c`
/// and optionally `d`, each as `re[,im]`.
#[derive(Debug, Deserialize)]
pub struct LiftQuery {
    pub slice: Option<String>,
    pub s_re: Option<f64>,
    pub s_im: Option<f64>,
    pub a: Option<String>,
    pub b: Option<String>,
    pub c: Option<String>,
    pub d: Option<String>,
    pub w0: Option<String>,
    pub steps: Option<usize>,
}

impl LiftQuery {
    fn params(&self, st: &AppState) -> ApiResult<SkewParams> {
        let cx = |s: &Option<String>| s.as_deref().map(parse_cx).transpose().map_err(bad);
        match (cx(&self.a)?, cx(&self.b)?, cx(&self.c)?) {
            (None, None, None) => {
                let slice = st.slice(self.slice.as_deref().unwrap_or("default"))?;
                let s = Cx::new(self.s_re.unwrap_or(0.0), self.s_im.unwrap_or(0.0));
                Ok(slice.params_at_s(s))
            }
            (a, b, c) => {
                let d = cx(&self.d)?.unwrap_or(st.config.base_d());
                let zero = Cx::new(0.0, 0.0);
                let base = BaseQuadratic::new(d)?;
                Ok(SkewParams::new(
                    a.unwrap_or(zero),
                    b.unwrap_or(zero),
                    c.unwrap_or(zero),
                    base,
                )?)
            }
        }
    }
}

async fn lift(State(st): Shared, Query(lq): Query<LiftQuery>) -> ApiResult<Response> {
    let params = lq.params(&st)?;
    let w0 = lq.w0.as_deref().map(parse_cx).transpose().map_err(bad)?;
    if lq.steps.is_some_and(|s| s == 0 || s > MAX_LIFT_STEPS) {
        return Err(bad(format!("steps must lie in 1..={MAX_LIFT_STEPS}")));
    }
    let steps = lq.steps;
    let r = blocking(move || Ok(lift_report(&st.config, &params, w0, steps)?)).await?;
    Ok(Json(r).into_response())
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/slices", get(list_slices).post(add_slice))
        .route("/tiles/{slice}/{z}/{x}/{y}", get(tile))
        .route("/api/meta", get(meta))
        .route("/api/point", get(point))
        .route("/api/lift", get(lift))
        .with_state(state)
}

pub async fn serve(config: JobConfig, host: &str, port: u16) -> anyhow::Result<()> {
    let state = Arc::new(AppState::new(config));
    let listener = tokio::net::TcpListener::bind((host, port)).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state)).await?;
    Ok(())
}

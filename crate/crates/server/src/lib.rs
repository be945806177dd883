//! HTTP+JSON API over a [`Workbench`].
//!
//! Every binary64 value that must survive the trip bit for bit travel as a
//! 16-digit hex bit pattern. Errors come back as [`ApiError`] bodies with a
//! stable `code`.

mod api;
mod error;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::routing::{get, post};
use axum::Router;
use fpwb_core::session::{Workbench, WorkbenchConfig};
use tower_http::cors::CorsLayer;
use tower_http::services::ServeDir;

pub use api::{
    translate_text, CandidateRequest, CreateSession, LocalErrorRequest, PointValues, RangeSpec, RangeValue, RegimesRequest,
    SuggestRequest, TranslateRequest,
};
pub use error::ApiError;

/// Environment variable that pins the default sampling seed.
pub const SEED_ENV: &str = "FPWB_SEED";

#[derive(Clone)]
pub struct AppState {
    pub workbench: Arc<Workbench>,
    /// Seed used when a create request gives none.
    pub default_seed: u64,
}

impl AppState {
    pub fn new(workbench: Arc<Workbench>) -> AppState {
        AppState { workbench, default_seed: seed_from_env() }
    }
}

/// `FPWB_SEED` if set to an integer, else the core default.
pub fn seed_from_env() -> u64 {
    std::env::var(SEED_ENV)
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(fpwb_core::expr::DEFAULT_SEED)
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/sessions", post(api::create_session))
        .route("/api/sessions/{id}/table", get(api::table))
        .route("/api/sessions/{id}/sample", get(api::sample))
        .route("/api/sessions/{id}/stats", get(api::stats))
        .route("/api/sessions/{id}/candidates", post(api::add_candidate))
        .route("/api/sessions/{id}/range", post(api::set_range))
        .route("/api/sessions/{id}/candidates/{cid}/errors", get(api::errors))
        .route("/api/sessions/{id}/candidates/{cid}/localerror", post(api::local_error))
        .route("/api/sessions/{id}/candidates/{cid}/visibility", post(api::visibility))
        .route("/api/sessions/{id}/suggest", post(api::suggest))
        .route("/api/sessions/{id}/regimes", post(api::regimes))
        .route("/api/jobs/{jid}", get(api::poll_job))
        .route("/api/jobs/{jid}/cancel", post(api::cancel_job))
        .route("/api/rules", get(api::rules))
        .route("/api/translate", post(api::translate))
        .with_state(state)
}

#[derive(Clone, Debug)]
pub struct ServeOptions {
    pub host: String,
    pub port: u16,
    /// Static UI bundle served at `/`.
    pub ui_dir: Option<PathBuf>,
    pub workers: usize,
    pub snapshot_dir: Option<PathBuf>,
    pub seed: u64,
}

impl Default for ServeOptions {
    fn default() -> Self {
        ServeOptions {
            host: "127.0.0.1".into(),
            port: 8080,
            ui_dir: None,
            workers: fpwb_core::session::DEFAULT_WORKERS,
            snapshot_dir: None,
            seed: seed_from_env(),
        }
    }
}

/// The full application: API routes, CORS, and the UI bundle if given.
pub fn app(opts: &ServeOptions) -> Router {
    let wb = Workbench::new(WorkbenchConfig {
        workers: opts.workers,
        snapshot_dir: opts.snapshot_dir.clone(),
        ..WorkbenchConfig::default()
    });
    let state = AppState { workbench: Arc::new(wb), default_seed: opts.seed };
    let app = router(state);
    let app = match &opts.ui_dir {
        Some(dir) => app.fallback_service(ServeDir::new(dir)),
        None => app.fallback(api::not_found),
    };
    app.layer(CorsLayer::permissive())
}

pub async fn serve(opts: ServeOptions) -> std::io::Result<()> {
    if let Some(dir) = &opts.snapshot_dir {
        std::fs::create_dir_all(dir)?;
    }
    let listener = tokio::net::TcpListener::bind((opts.host.as_str(), opts.port)).await?;
    let addr: SocketAddr = listener.local_addr()?;
    tracing::info!("listening on http://{addr}");
    axum::serve(listener, app(&opts)).await
}

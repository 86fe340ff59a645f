//! HTTP service over a file-backed evaluation store.
//!
//! Evaluator routes only ever serialize blinded tasks and position numbers.
//! Every request takes one process-wide lock, so ledger appends are
//! serialized and each request reads a consistent snapshot of the store.

pub mod auth;
pub mod error;
mod routes;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, MutexGuard};

use axum::routing::{get, post};
use axum::Router;
use lalaeval_core::store::{Store, StoreError};
use thiserror::Error;

pub use auth::{Role, SessionToken, TokenFile, TokenFileError, TOKENS_SCHEMA};
pub use error::ApiError;
pub use routes::{CreateCampaign, GradeSubmission};

#[derive(Clone)]
pub struct AppState {
    root: Arc<PathBuf>,
    tokens: Arc<Vec<SessionToken>>,
    committer: Arc<Mutex<()>>,
}

impl AppState {
    pub fn new(root: impl Into<PathBuf>, tokens: Vec<SessionToken>) -> Self {
        Self { root: Arc::new(root.into()), tokens: Arc::new(tokens), committer: Arc::new(Mutex::new(())) }
    }

    fn lock(&self) -> MutexGuard<'_, ()> {
        // A panic while holding the lock cannot leave the files half-written
        // (writes are atomic or single appends), so poisoning is ignored.
        self.committer.lock().unwrap_or_else(|p| p.into_inner())
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/evaluators/{id}/tasks", get(routes::evaluator_tasks))
        .route("/api/grades", post(routes::submit_grade))
        .route("/api/campaigns", post(routes::create_campaign))
        .route("/api/campaigns/{id}/progress", get(routes::progress))
        .route("/api/campaigns/{id}/report", get(routes::report))
        .route("/api/campaigns/{id}/close", post(routes::close_campaign))
        .with_state(state)
}

#[derive(Debug, Clone)]
pub struct ServeConfig {
    pub store: PathBuf,
    /// Defaults to `tokens.json` in the store root.
    pub tokens: Option<PathBuf>,
    pub addr: SocketAddr,
}

#[derive(Debug, Error)]
pub enum ServeError {
    #[error("store is corrupt: {0}")]
    StoreCorrupt(#[from] StoreError),
    #[error("token file {path}: {source}")]
    Tokens { path: PathBuf, source: TokenFileError },
    #[error("cannot bind {addr}: {source}")]
    PortUnavailable { addr: SocketAddr, source: std::io::Error },
    #[error("server error: {0}")]
    Io(#[from] std::io::Error),
}

/// Checks the store and token file, binds, and returns the state and
/// listener so callers can report the bound address before serving.
pub async fn prepare(config: &ServeConfig) -> Result<(AppState, tokio::net::TcpListener), ServeError> {
    Store::open(&config.store)?;
    let path = config.tokens.clone().unwrap_or_else(|| config.store.join("tokens.json"));
    let tokens = TokenFile::load(&path).map_err(|source| ServeError::Tokens { path: path.clone(), source })?;
    let listener = tokio::net::TcpListener::bind(config.addr)
        .await
        .map_err(|source| ServeError::PortUnavailable { addr: config.addr, source })?;
    Ok((AppState::new(config.store.clone(), tokens.tokens), listener))
}

/// Serves until Ctrl-C.
pub async fn run(state: AppState, listener: tokio::net::TcpListener) -> Result<(), ServeError> {
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

pub async fn serve(config: ServeConfig) -> Result<(), ServeError> {
    let (state, listener) = prepare(&config).await?;
    run(state, listener).await
}

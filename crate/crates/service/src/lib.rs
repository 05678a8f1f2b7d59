//! HTTP front-end over the analysis engine.
//!
//! Sessions live in memory behind per-session locks and are mirrored to one
//! JSON file each under the data directory.

pub mod api;
pub mod error;
pub mod session;

use std::collections::HashMap;
use std::future::Future;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::extract::DefaultBodyLimit;
use axum::routing::{get, patch, post};
use axum::Router;
use tokio::sync::RwLock;

pub use error::{ApiError, ApiResult};
pub use session::Session;

const BODY_LIMIT: usize = 256 * 1024 * 1024;

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error("data directory {path}: {source}")]
    DataDir {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot bind {addr}: {source}")]
    Bind {
        addr: SocketAddr,
        source: std::io::Error,
    },
    #[error("server: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

struct Inner {
    data_dir: PathBuf,
    sessions: RwLock<HashMap<String, Arc<RwLock<Session>>>>,
}

impl AppState {
    /// Opens (creating if needed) the data directory and loads every stored
    /// session. Unreadable session files are skipped with a warning.
    pub fn open(data_dir: impl Into<PathBuf>) -> Result<Self, ServeError> {
        let data_dir = data_dir.into();
        let dir_err = |source| ServeError::DataDir {
            path: data_dir.clone(),
            source,
        };
        std::fs::create_dir_all(&data_dir).map_err(dir_err)?;
        let mut sessions = HashMap::new();
        for entry in std::fs::read_dir(&data_dir).map_err(dir_err)? {
            let path = entry.map_err(dir_err)?.path();
            if path.extension().is_some_and(|e| e == "json") {
                match Session::load(&path) {
                    Ok(s) => {
                        sessions.insert(s.id.clone(), Arc::new(RwLock::new(s)));
                    }
                    Err(e) => tracing::warn!("skipping session file: {e}"),
                }
            }
        }
        // Probe writability up front so a read-only directory fails at startup.
        let probe = data_dir.join(".write-probe");
        std::fs::write(&probe, b"").map_err(dir_err)?;
        let _ = std::fs::remove_file(probe);
        Ok(AppState {
            inner: Arc::new(Inner {
                data_dir,
                sessions: RwLock::new(sessions),
            }),
        })
    }

    pub fn data_dir(&self) -> &Path {
        &self.inner.data_dir
    }

    pub async fn get(&self, id: &str) -> Option<Arc<RwLock<Session>>> {
        self.inner.sessions.read().await.get(id).cloned()
    }

    pub async fn all(&self) -> Vec<Arc<RwLock<Session>>> {
        self.inner.sessions.read().await.values().cloned().collect()
    }

    pub async fn insert(&self, session: Session) -> ApiResult<()> {
        self.persist(&session)?;
        self.inner
            .sessions
            .write()
            .await
            .insert(session.id.clone(), Arc::new(RwLock::new(session)));
        Ok(())
    }

    pub fn persist(&self, session: &Session) -> ApiResult<()> {
        session
            .save(&self.inner.data_dir)
            .map_err(|e| ApiError::internal(format!("saving session: {e}")))
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/health", get(api::health))
        .route(
            "/sessions",
            get(api::list_sessions).post(api::create_session),
        )
        .route("/sessions/{id}", get(api::get_session))
        .route("/sessions/{id}/gaze.csv", get(api::export_gaze))
        .route("/sessions/{id}/detect", post(api::detect))
        .route("/sessions/{id}/aois", patch(api::edit_aois))
        .route("/sessions/{id}/patterns", get(api::patterns))
        .route("/sessions/{id}/similarity", get(api::similarity))
        .route("/sessions/{id}/layout", post(api::layout))
        .route("/sessions/{id}/export.svg", get(api::export_svg))
        .layer(DefaultBodyLimit::max(BODY_LIMIT))
        .with_state(state)
}

/// Serves until `shutdown` resolves.
pub async fn serve(
    addr: SocketAddr,
    data_dir: PathBuf,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> Result<(), ServeError> {
    let state = AppState::open(data_dir)?;
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|source| ServeError::Bind { addr, source })?;
    tracing::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(shutdown)
        .await?;
    Ok(())
}

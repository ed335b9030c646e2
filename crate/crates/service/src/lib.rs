//! HTTP collection service.
//!
//! Issues trials, takes the client's sensor and stimulus records, verifies
//! code entries and persists one append-only session log per session:
//!
//! ```text
//! POST /api/v1/sessions
//! GET  /api/v1/sessions/{id}/trials/next
//! POST /api/v1/sessions/{id}/trials/{tid}/events   {"records":[{"t":"orient",...},...]}
//! POST /api/v1/sessions/{id}/trials/{tid}/entry    {"entered":"4711","ts":...}
//! POST /api/v1/sessions/{id}/trials/{tid}/void     {"reason":"..."}
//! POST /api/v1/sessions/{id}/finalize
//! GET  /api/v1/sessions/{id}/export
//! GET  /api/v1/sessions/{id}/labels
//! ```
//!
//! The issued trial includes its code, since the client has to render the
//! digits. Verification guards against participants who guess or read
//! peripherally, not against a modified client.

mod api;
mod config;
mod error;
mod session;
mod store;

use std::sync::Arc;

pub use api::{router, AppState, CodeInput, EntryRequest, EventsRequest, VoidRequest};
pub use config::{
    GatePolicy, ServiceConfig, ENV_BIND, ENV_CONFIG, ENV_DATA_DIR, ENV_GATE_POLICY, ENV_STATIC_DIR,
};
pub use error::ServiceError;
pub use session::{
    EntryAck, EventsAck, GateStatus, SessionDescriptor, SessionMetaFile, SessionState, SessionSummary,
    TrialStatus, TrialSummary, LOG_FILE, META_FILE,
};
pub use store::{CreateSessionRequest, SessionHandle, SessionStore};

/// Build the router for `config`, opening its data directory.
pub fn app(config: ServiceConfig) -> Result<axum::Router, ServiceError> {
    config.validate()?;
    Ok(router(Arc::new(SessionStore::open(config)?)))
}

/// Serve until `shutdown` resolves.
pub async fn serve(
    config: ServiceConfig,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> Result<(), ServiceError> {
    let bind = config.bind.clone();
    let app = app(config)?;
    let listener = tokio::net::TcpListener::bind(&bind).await?;
    tracing::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, app).with_graceful_shutdown(shutdown).await?;
    Ok(())
}

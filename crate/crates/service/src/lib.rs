//! HTTP service driving interactive exploration sessions.
//!
//! Each session owns an explorer on a background thread. Clients control it
//! over JSON endpoints and follow its discoveries as server-sent events.

// `!(a <= b)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod api;
pub mod session;

pub use api::{router, AppState, CreateSession, SessionInfo};
pub use session::{Action, Census, Session, SessionEvent, SessionState};

/// Serves the API on `listener` until the process ends.
pub async fn serve(listener: tokio::net::TcpListener) -> std::io::Result<()> {
    axum::serve(listener, router(AppState::default())).await
}

//! HTTP control plane: approach and goal configuration, dataset upload, run
//! control, and live telemetry for the dashboard.

mod error;
mod routes;
mod state;

use std::path::PathBuf;

pub use error::{ApiError, ApiResult};
pub use routes::{router, TELEMETRY_PAGE, TELEMETRY_PAGE_MAX};
pub use state::AppState;

pub const DEFAULT_PORT: u16 = 8080;

/// Serves the API on an already bound listener until the process ends.
pub async fn serve(listener: tokio::net::TcpListener, data_dir: impl Into<PathBuf>) -> std::io::Result<()> {
    let app = AppState::new(data_dir)?;
    axum::serve(listener, router(app)).await
}

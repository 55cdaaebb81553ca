//! HTTP JSON API over the assessment sessions and the advisement KB.
//!
//! | method | path | |
//! |---|---|---|
//! | POST | `/sessions` | start a session: `{background, science-group}` |
//! | GET | `/sessions/{id}` | phase, deadline, current question |
//! | GET | `/sessions/{id}/question` | current question; 409 once finalized |
//! | POST | `/sessions/{id}/answer` | `{question-id, choice-index}` |
//! | GET | `/sessions/{id}/report` | JSON, or `?format=raw` for the report file |
//! | POST | `/admin/reload-kb` | `Authorization: Bearer <admin-token>` |

pub mod clock;
pub mod config;
pub mod error;
pub mod http;
pub mod service;
pub mod store;

use std::sync::Arc;

pub use clock::{Clock, ManualClock, SystemClock};
pub use config::{Config, ConfigError};
pub use error::ApiError;
pub use http::router;
pub use service::{CreateSession, QuestionView, Service, SessionView, SubmitAnswer};

use dss_core::assessment::BankError;
use dss_core::kb::KbError;

#[derive(Debug, thiserror::Error)]
pub enum StartupError {
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("question bank: {0}")]
    Bank(#[from] BankError),
    #[error("knowledge base: {0}")]
    Kb(#[from] KbError),
    #[error("session store: {0}")]
    Store(#[from] store::StoreError),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

/// Serves until ctrl-c.
pub async fn serve(config: Config) -> Result<(), StartupError> {
    let listen = config.listen;
    let service = tokio::task::spawn_blocking(move || Service::open(config, Arc::new(SystemClock)))
        .await
        .expect("startup task panicked")?;
    let listener = tokio::net::TcpListener::bind(listen).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, router(Arc::new(service)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

//! The networked hazard registry: HTTP API over the disclosure engine,
//! bearer-token authentication, and an append-only event log that is
//! replayed on every start.

pub mod api;
pub mod config;
pub mod registry;
pub mod storage;
pub mod tokens;

use std::net::SocketAddr;
use std::sync::Arc;

pub use config::{Config, ConfigError};
pub use registry::{system_clock, ApiError, Clock, OpenError, Registry};

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Open(#[from] OpenError),
    #[error("cannot bind {addr}: {source}")]
    Bind {
        addr: SocketAddr,
        source: std::io::Error,
    },
    #[error("server failed: {0}")]
    Io(#[from] std::io::Error),
}

/// A registry listening on a socket.
pub struct RunningServer {
    pub addr: SocketAddr,
    pub registry: Arc<Registry>,
    shutdown: Option<tokio::sync::oneshot::Sender<()>>,
    task: tokio::task::JoinHandle<std::io::Result<()>>,
}

impl RunningServer {
    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Stop accepting requests and wait for in-flight ones to finish.
    pub async fn stop(mut self) -> Result<(), ServeError> {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        self.task
            .await
            .map_err(|e| ServeError::Io(std::io::Error::other(e.to_string())))??;
        Ok(())
    }
}

/// Open the data directory, replay the log and start serving. Binding to
/// port 0 picks a free port; see [`RunningServer::addr`].
pub async fn start(config: Config, clock: Clock) -> Result<RunningServer, ServeError> {
    config.validate()?;
    let addr = config.bind;
    let registry = Arc::new(Registry::open(config, clock)?);
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|source| ServeError::Bind { addr, source })?;
    let addr = listener.local_addr()?;
    let (tx, rx) = tokio::sync::oneshot::channel::<()>();
    let app = api::router(registry.clone());
    let task = tokio::spawn(async move {
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = rx.await;
            })
            .await
    });
    tracing::info!(%addr, "registry listening");
    Ok(RunningServer {
        addr,
        registry,
        shutdown: Some(tx),
        task,
    })
}

/// Serve until interrupted.
pub async fn serve(config: Config) -> Result<(), ServeError> {
    let server = start(config, system_clock()).await?;
    let _ = tokio::signal::ctrl_c().await;
    server.stop().await
}

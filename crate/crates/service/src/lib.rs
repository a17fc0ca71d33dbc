//! HTTP API over the PIM prototyper engine.
//!
//! Projects persist as `.pimproj` files under a data directory and uploaded
//! images go into a content-addressed store next to them. Simulation sessions
//! are kept in memory and expire after a period of inactivity.
//!
//! ```no_run
//! # async fn demo() -> Result<(), pimp_service::ServeError> {
//! let config = pimp_service::Config {
//!     port: 0,
//!     data_dir: "data".into(),
//!     ..Default::default()
//! };
//! let server = pimp_service::serve(config).await?;
//! println!("listening on {}", server.local_addr());
//! server.shutdown().await?;
//! # Ok(())
//! # }
//! ```

mod error;
mod routes;
mod state;

use std::future::Future;
use std::io;
use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::path::PathBuf;
use std::time::Duration;

use thiserror::Error;
use tokio::net::TcpListener;
use tokio::sync::oneshot;
use tokio::task::JoinHandle;

pub use error::ApiError;

#[derive(Debug, Clone)]
pub struct Config {
    pub host: IpAddr,
    /// 0 picks a free port.
    pub port: u16,
    pub data_dir: PathBuf,
    pub max_image_bytes: usize,
    pub session_idle: Duration,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            host: IpAddr::V4(Ipv4Addr::LOCALHOST),
            port: 8080,
            data_dir: PathBuf::from("pimp-data"),
            max_image_bytes: 10 * 1024 * 1024,
            session_idle: Duration::from_secs(30 * 60),
        }
    }
}

#[derive(Debug, Error)]
pub enum ServeError {
    #[error("port {port} is already in use")]
    PortInUse { port: u16 },
    #[error("data directory {} is not writable: {source}", path.display())]
    DataDirUnwritable { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl ServeError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::PortInUse { .. } => "PortInUse",
            Self::DataDirUnwritable { .. } => "DataDirUnwritable",
            Self::Io(_) => "StorageError",
        }
    }
}

/// A server accepting connections in a background task.
pub struct RunningServer {
    addr: SocketAddr,
    shutdown: oneshot::Sender<()>,
    task: JoinHandle<io::Result<()>>,
    sweeper: JoinHandle<()>,
}

impl RunningServer {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    /// Stops accepting connections and waits for in-flight requests, including
    /// their project writes, to finish.
    pub async fn shutdown(self) -> io::Result<()> {
        let _ = self.shutdown.send(());
        self.sweeper.abort();
        self.task.await.map_err(io::Error::other)?
    }

    /// Runs until `signal` resolves, then shuts down gracefully.
    pub async fn run_until(self, signal: impl Future<Output = ()>) -> io::Result<()> {
        signal.await;
        tracing::info!("shutting down");
        self.shutdown().await
    }
}

/// Opens the data directory, binds the port and starts serving.
pub async fn serve(config: Config) -> Result<RunningServer, ServeError> {
    let state = state::AppState::open(
        &config.data_dir,
        config.max_image_bytes,
        config.session_idle,
    )
    .map_err(|source| ServeError::DataDirUnwritable {
        path: config.data_dir.clone(),
        source,
    })?;
    let listener = TcpListener::bind((config.host, config.port))
        .await
        .map_err(|e| {
            if e.kind() == io::ErrorKind::AddrInUse {
                ServeError::PortInUse { port: config.port }
            } else {
                ServeError::Io(e)
            }
        })?;
    let addr = listener.local_addr()?;
    tracing::info!(%addr, data_dir = %config.data_dir.display(), "listening");

    // the envelope around an image upload is small; leave room for it
    let body_limit = config.max_image_bytes.saturating_add(64 * 1024);
    let app = routes::router(state.clone(), body_limit);

    let sweep_every =
        (config.session_idle / 4).clamp(Duration::from_millis(50), Duration::from_secs(60));
    let sweeper = tokio::spawn(async move {
        let mut tick = tokio::time::interval(sweep_every);
        loop {
            tick.tick().await;
            let dropped = state.expire_sessions();
            if dropped > 0 {
                tracing::debug!(dropped, "expired idle sessions");
            }
        }
    });

    let (tx, rx) = oneshot::channel::<()>();
    let task = tokio::spawn(async move {
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = rx.await;
            })
            .await
    });
    Ok(RunningServer {
        addr,
        shutdown: tx,
        task,
        sweeper,
    })
}

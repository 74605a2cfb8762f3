//! HTTP service around a single notice engine.
//!
//! Registry changes, collection events and focus changes are accepted over
//! JSON endpoints, written to an append-only event log, and pushed to
//! `GET /api/stream` subscribers as server-sent events: one `snapshot`
//! event with the full cube state, then a `delta` per applied mutation.
//! On startup an existing event log is replayed so the service resumes
//! where it stopped.

use std::future::Future;
use std::io;
use std::net::{Ipv4Addr, SocketAddr};
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use privacycube_core::Registry;
use thiserror::Error;
use tokio::net::TcpListener;

pub mod event_log;
pub mod hub;
pub mod routes;
pub mod sse;

pub use event_log::{read_event_log, replay_event_log, EventLog, EventLogEntry, Mutation, ReplayError};
pub use hub::{Ack, CommitError, Hub};
pub use routes::{router, ErrorBody};

pub const DEFAULT_PORT: u16 = 8080;
pub const DEFAULT_KEEP_ALIVE: Duration = Duration::from_secs(15);

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub listen: SocketAddr,
    pub profile_dir: PathBuf,
    pub event_log: PathBuf,
    pub keep_alive: Duration,
}

impl ServiceConfig {
    /// Loopback on `port` with the default keep-alive interval.
    pub fn new(port: u16, profile_dir: impl Into<PathBuf>, event_log: impl Into<PathBuf>) -> Self {
        ServiceConfig {
            listen: SocketAddr::from((Ipv4Addr::LOCALHOST, port)),
            profile_dir: profile_dir.into(),
            event_log: event_log.into(),
            keep_alive: DEFAULT_KEEP_ALIVE,
        }
    }

    pub fn validate(&self) -> Result<(), ServiceError> {
        if self.listen.port() == 0 {
            return Err(ServiceError::InvalidPort(0));
        }
        if self.keep_alive.is_zero() {
            return Err(ServiceError::InvalidKeepAlive);
        }
        self.check_paths()
    }

    fn check_paths(&self) -> Result<(), ServiceError> {
        let dir_ok = std::fs::metadata(&self.profile_dir).and_then(|m| {
            if m.is_dir() {
                Ok(())
            } else {
                Err(io::Error::new(io::ErrorKind::NotADirectory, "not a directory"))
            }
        });
        dir_ok.map_err(|source| ServiceError::ProfileDir {
            path: self.profile_dir.clone(),
            source,
        })?;
        event_log::check_log_path(&self.event_log).map_err(|source| ServiceError::EventLog {
            path: self.event_log.clone(),
            source,
        })
    }
}

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("port must be in 1..=65535, got {0}")]
    InvalidPort(u32),
    #[error("keep-alive interval must be positive")]
    InvalidKeepAlive,
    #[error("profile directory {path}: {source}")]
    ProfileDir {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("event log {path}: {source}")]
    EventLog {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("cannot resume from event log: {0}")]
    Replay(#[from] ReplayError),
    #[error("cannot listen on {addr}: {source}")]
    Bind {
        addr: SocketAddr,
        #[source]
        source: io::Error,
    },
    #[error("server error: {0}")]
    Serve(#[source] io::Error),
}

/// A bound, resumed service that has not started accepting yet.
pub struct Server {
    listener: TcpListener,
    hub: Arc<Hub>,
    keep_alive: Duration,
}

impl Server {
    /// Replays `config.event_log` on top of `profiles`, opens it for
    /// appending and binds the listener. Port 0 picks a free port.
    pub async fn bind(config: &ServiceConfig, profiles: Registry) -> Result<Server, ServiceError> {
        config.check_paths()?;
        let entries = read_event_log(&config.event_log)?;
        let engine = event_log::replay_entries(&entries, profiles)?;
        let log = EventLog::open(&config.event_log, entries.len() as u64).map_err(|source| {
            ServiceError::EventLog {
                path: config.event_log.clone(),
                source,
            }
        })?;
        let listener = TcpListener::bind(config.listen)
            .await
            .map_err(|source| ServiceError::Bind {
                addr: config.listen,
                source,
            })?;
        tracing::info!(
            resumed_entries = entries.len(),
            version = engine.version(),
            devices = engine.registry().len(),
            "engine ready"
        );
        Ok(Server {
            listener,
            hub: Hub::new(engine, log),
            keep_alive: config.keep_alive,
        })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.listener.local_addr().expect("bound listener has an address")
    }

    pub fn hub(&self) -> Arc<Hub> {
        self.hub.clone()
    }

    /// Serves until `shutdown` resolves, then closes streams and drains.
    pub async fn run(self, shutdown: impl Future<Output = ()> + Send + 'static) -> Result<(), ServiceError> {
        let hub = self.hub.clone();
        let app = router(self.hub, self.keep_alive);
        tracing::info!(addr = %self.listener.local_addr().map_err(ServiceError::Serve)?, "listening");
        axum::serve(self.listener, app)
            .with_graceful_shutdown(async move {
                shutdown.await;
                hub.close_streams();
            })
            .await
            .map_err(ServiceError::Serve)
    }
}

/// Runs the service until Ctrl-C.
pub async fn serve(config: ServiceConfig, initial: Registry) -> Result<(), ServiceError> {
    config.validate()?;
    let server = Server::bind(&config, initial).await?;
    server
        .run(async {
            let _ = tokio::signal::ctrl_c().await;
            tracing::info!("shutting down");
        })
        .await
}

//! The single engine instance behind the service.
//!
//! Every mutation takes the hub lock, is applied to a copy of the engine,
//! appended to the event log, committed, and only then broadcast and
//! acknowledged. Readers take the same lock briefly to copy the rendered
//! state, so they never observe a version that is not yet on disk.

use std::io;
use std::sync::Arc;

use privacycube_core::{diff_states, CubeState, EngineError, EngineState, StateDelta};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tokio::sync::{broadcast, watch, Mutex};

use crate::event_log::{EventLog, Mutation};

const DELTA_CAPACITY: usize = 256;

/// Acknowledgement returned once a mutation is durable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ack {
    pub seq: u64,
    pub version: u64,
}

#[derive(Debug, Error)]
pub enum CommitError {
    #[error(transparent)]
    Rejected(#[from] EngineError),
    #[error("event log append failed: {0}")]
    Log(#[source] io::Error),
    #[error("event log is unavailable after an earlier write failure")]
    LogUnavailable,
}

struct Inner {
    engine: EngineState,
    cube: CubeState,
    log: EventLog,
    log_failed: bool,
}

pub struct Hub {
    inner: Mutex<Inner>,
    deltas: broadcast::Sender<Arc<StateDelta>>,
    closing: watch::Sender<bool>,
}

impl Hub {
    pub fn new(engine: EngineState, log: EventLog) -> Arc<Hub> {
        let cube = engine.cube_state();
        let (deltas, _) = broadcast::channel(DELTA_CAPACITY);
        let (closing, _) = watch::channel(false);
        Arc::new(Hub {
            inner: Mutex::new(Inner {
                engine,
                cube,
                log,
                log_failed: false,
            }),
            deltas,
            closing,
        })
    }

    /// Applies `mutation`, then runs `view` on the committed engine while
    /// still holding the lock.
    pub async fn commit<R>(
        &self,
        wall_ms: u64,
        mutation: Mutation,
        view: impl FnOnce(&EngineState) -> R,
    ) -> Result<(Ack, R), CommitError> {
        let mut inner = self.inner.lock().await;
        if inner.log_failed {
            return Err(CommitError::LogUnavailable);
        }
        let mut next = inner.engine.clone();
        mutation.apply(&mut next)?;
        let entry = match inner.log.append(wall_ms, next.version(), mutation) {
            Ok(entry) => entry,
            Err(e) => {
                // a partial line may now be on disk; refuse to write after it
                inner.log_failed = true;
                tracing::error!(error = %e, path = %inner.log.path().display(), "event log append failed");
                return Err(CommitError::Log(e));
            }
        };
        let cube = next.cube_state();
        let delta = diff_states(&inner.cube, &cube).expect("engine versions only increase");
        inner.engine = next;
        inner.cube = cube;
        let _ = self.deltas.send(Arc::new(delta));
        let view = view(&inner.engine);
        Ok((
            Ack {
                seq: entry.seq,
                version: entry.version,
            },
            view,
        ))
    }

    pub async fn state(&self) -> CubeState {
        self.inner.lock().await.cube.clone()
    }

    pub async fn read<R>(&self, view: impl FnOnce(&EngineState) -> R) -> R {
        view(&self.inner.lock().await.engine)
    }

    /// Current state plus a receiver for every delta after it.
    pub async fn subscribe(&self) -> (CubeState, broadcast::Receiver<Arc<StateDelta>>) {
        let inner = self.inner.lock().await;
        (inner.cube.clone(), self.deltas.subscribe())
    }

    /// Ends open streams so a graceful shutdown can finish.
    pub fn close_streams(&self) {
        self.closing.send_replace(true);
    }

    pub(crate) fn closing(&self) -> watch::Receiver<bool> {
        self.closing.subscribe()
    }
}

use std::io::ErrorKind;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::RngCore;
use thiserror::Error;
use tokio::net::TcpListener;
use tokio::sync::watch;
use tokio::task::JoinHandle;

use geolab_core::accounts::{AccountError, Accounts, AccountsConfig, HashCost};
use geolab_core::recorder::{Recorder, RecorderError};
use geolab_core::session::{SessionConfig, SessionEngine, SessionError};
use geolab_core::{Clock, SystemClock};
use geolab_store::{Store, StoreError, StoreOptions};

use crate::config::ServerConfig;
use crate::routes::router;
use crate::state::AppState;

#[derive(Debug, Error)]
pub enum ServeError {
    #[error("port {0} is already in use")]
    PortInUse(u16),
    #[error("data directory {path} is not writable: {source}")]
    DataDirUnwritable { path: PathBuf, source: std::io::Error },
    #[error("cannot listen: {0}")]
    Listen(std::io::Error),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Accounts(#[from] AccountError),
    #[error(transparent)]
    Sessions(#[from] SessionError),
    #[error(transparent)]
    Recorder(#[from] RecorderError),
}

fn unwritable(path: &Path) -> impl FnOnce(std::io::Error) -> ServeError + '_ {
    move |source| ServeError::DataDirUnwritable { path: path.to_path_buf(), source }
}

fn prepare_data_dir(dir: &Path) -> Result<(), ServeError> {
    std::fs::create_dir_all(dir).map_err(unwritable(dir))?;
    let probe = dir.join(".write-probe");
    std::fs::write(&probe, b"ok").map_err(unwritable(dir))?;
    std::fs::remove_file(&probe).map_err(unwritable(dir))?;
    Ok(())
}

/// Configured pepper, or the one kept in the data directory (created on
/// first start).
fn load_pepper(config: &ServerConfig) -> Result<Vec<u8>, ServeError> {
    if let Some(p) = &config.pepper {
        return Ok(p.as_bytes().to_vec());
    }
    let path = config.data_dir.join("pepper");
    match std::fs::read_to_string(&path) {
        Ok(text) => hex::decode(text.trim()).map_err(|e| ServeError::DataDirUnwritable {
            path: path.clone(),
            source: std::io::Error::new(ErrorKind::InvalidData, e),
        }),
        Err(e) if e.kind() == ErrorKind::NotFound => {
            let mut bytes = [0u8; 32];
            rand::thread_rng().fill_bytes(&mut bytes);
            std::fs::write(&path, hex::encode(bytes)).map_err(unwritable(&config.data_dir))?;
            Ok(bytes.to_vec())
        }
        Err(e) => Err(unwritable(&config.data_dir)(e)),
    }
}

/// A server accepting connections in the background.
pub struct RunningServer {
    addr: SocketAddr,
    state: AppState,
    stop: watch::Sender<bool>,
    task: JoinHandle<std::io::Result<()>>,
}

impl RunningServer {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn state(&self) -> &AppState {
        &self.state
    }

    /// Stops accepting requests, persists session state, seals unfinished
    /// logs and closes the store.
    pub async fn shutdown(self) -> Result<(), ServeError> {
        let _ = self.stop.send(true);
        match self.task.await {
            Ok(Err(e)) => tracing::warn!(error = %e, "server loop ended with error"),
            Err(e) => tracing::warn!(error = %e, "server task failed"),
            Ok(Ok(())) => {}
        }
        self.state.sessions.shutdown().await;
        let sealed = self.state.recorder.seal_open_logs()?;
        self.state.accounts.store().close();
        tracing::info!(sealed_logs = sealed, "server stopped");
        Ok(())
    }

    /// Waits until the server loop exits on its own.
    pub async fn wait(&mut self) {
        let _ = (&mut self.task).await;
    }
}

pub async fn start(config: ServerConfig) -> Result<RunningServer, ServeError> {
    prepare_data_dir(&config.data_dir)?;
    let listener = TcpListener::bind((config.bind.as_str(), config.port)).await.map_err(|e| {
        if e.kind() == ErrorKind::AddrInUse {
            ServeError::PortInUse(config.port)
        } else {
            ServeError::Listen(e)
        }
    })?;
    let addr = listener.local_addr().map_err(ServeError::Listen)?;

    let store = Store::open_with(config.data_dir.join("store"), StoreOptions { sync: true, faults: None })?;
    let clock: Arc<dyn Clock> = Arc::new(SystemClock);
    let accounts = Arc::new(Accounts::new(
        store,
        clock.clone(),
        AccountsConfig {
            pepper: load_pepper(&config)?,
            hash_cost: if config.fast_hashing { HashCost::FAST } else { HashCost::DEFAULT },
            token_idle_expiry_ms: config.token_idle_expiry_ms as i64,
        },
    ));
    if let Some(admin) = &config.admin {
        accounts.bootstrap_admin(&admin.username, &admin.credential)?;
    }
    let defaults = SessionConfig {
        sync_interval_ms: config.sync_interval_ms,
        lock_idle_timeout_ms: config.lock_timeout_ms,
    };
    let sessions = SessionEngine::start(accounts.clone(), clock, defaults)?;
    let recorder = Arc::new(Recorder::new(accounts.clone()));

    let (stop, stop_rx) = watch::channel(false);
    let state = AppState { accounts, sessions, recorder, shutdown: stop_rx.clone() };
    let app = router(state.clone());
    let mut signal = stop_rx;
    let task = tokio::spawn(async move {
        axum::serve(listener, app)
            .with_graceful_shutdown(async move {
                let _ = signal.wait_for(|stop| *stop).await;
            })
            .await
    });
    tracing::info!(%addr, data_dir = %config.data_dir.display(), "listening");
    Ok(RunningServer { addr, state, stop, task })
}

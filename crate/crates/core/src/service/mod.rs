//! HTTP service and CLI.
//!
//! Every campaign mutation goes through [`Store`], which serializes writers;
//! handlers only authenticate, decode and map errors. Errors are JSON
//! [`wire::ErrorBody`] values with a stable `code`.

mod api;
pub mod cli;
mod jobs;
pub mod wire;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

pub use api::{build_digest, router, ApiError, AppState};

use crate::campaign::Store;

/// Serves `store` on `addr` until `shutdown` resolves.
pub async fn serve(
    store: Arc<Store>,
    reports_dir: PathBuf,
    listener: tokio::net::TcpListener,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    let app = router(AppState::new(store, reports_dir));
    axum::serve(listener, app).with_graceful_shutdown(shutdown).await
}

/// A server on its own thread and runtime, for examples and tests.
pub struct ServerHandle {
    pub addr: SocketAddr,
    shutdown: Option<tokio::sync::oneshot::Sender<()>>,
    thread: Option<std::thread::JoinHandle<std::io::Result<()>>>,
}

impl ServerHandle {
    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Stops accepting connections and waits for in-flight requests.
    pub fn stop(mut self) -> std::io::Result<()> {
        self.shutdown_inner()
    }

    fn shutdown_inner(&mut self) -> std::io::Result<()> {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        match self.thread.take() {
            Some(t) => t.join().unwrap_or_else(|_| Err(std::io::Error::other("server thread panicked"))),
            None => Ok(()),
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        let _ = self.shutdown_inner();
    }
}

/// Binds `addr` (port 0 picks a free port) and serves on a background thread.
pub fn spawn_server(store: Arc<Store>, reports_dir: PathBuf, addr: &str) -> std::io::Result<ServerHandle> {
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    let listener = rt.block_on(tokio::net::TcpListener::bind(addr))?;
    let local = listener.local_addr()?;
    let (tx, rx) = tokio::sync::oneshot::channel::<()>();
    let thread = std::thread::spawn(move || {
        rt.block_on(serve(store, reports_dir, listener, async move {
            let _ = rx.await;
        }))
    });
    Ok(ServerHandle { addr: local, shutdown: Some(tx), thread: Some(thread) })
}

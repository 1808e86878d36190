use std::process::ExitCode;

use clap::Parser;
use tracing_subscriber::EnvFilter;

use geolab_server::{start, Cli, ServerConfig};

async fn terminate() {
    #[cfg(unix)]
    {
        use tokio::signal::unix::{signal, SignalKind};
        let mut term = signal(SignalKind::terminate()).expect("install SIGTERM handler");
        tokio::select! {
            _ = tokio::signal::ctrl_c() => {}
            _ = term.recv() => {}
        }
    }
    #[cfg(not(unix))]
    {
        let _ = tokio::signal::ctrl_c().await;
    }
}

#[tokio::main]
async fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .init();
    let cli = Cli::parse();
    let config = match ServerConfig::resolve(&cli, |k| std::env::var(k).ok()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("geolab-server: {e}");
            return ExitCode::from(2);
        }
    };
    let server = match start(config).await {
        Ok(s) => s,
        Err(e) => {
            eprintln!("geolab-server: {e}");
            return ExitCode::FAILURE;
        }
    };
    terminate().await;
    tracing::info!("shutting down");
    if let Err(e) = server.shutdown().await {
        eprintln!("geolab-server: {e}");
        return ExitCode::FAILURE;
    }
    ExitCode::SUCCESS
}

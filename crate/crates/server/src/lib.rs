//! HTTP API and live channel for the geometry lab.

pub mod channel;
pub mod config;
pub mod error;
pub mod routes;
pub mod server;
pub mod state;

pub use config::{Cli, ServerConfig};
pub use server::{start, RunningServer, ServeError};

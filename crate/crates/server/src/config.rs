use std::path::{Path, PathBuf};

use clap::Parser;
use serde::Deserialize;
use thiserror::Error;

use geolab_core::session::DEFAULT_SYNC_INTERVAL_MS;

pub const DEFAULT_TOKEN_IDLE_MS: u64 = 12 * 60 * 60 * 1000;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("bad config file {path}: {source}")]
    Parse { path: PathBuf, source: toml::de::Error },
    #[error("bad value for {name}: {value:?}")]
    BadValue { name: &'static str, value: String },
    #[error("missing setting: {0}")]
    Missing(&'static str),
}

#[derive(Debug, Clone, Parser)]
#[command(name = "geolab-server", version, about = "Collaborative geometry lab server")]
pub struct Cli {
    /// TCP port to listen on.
    #[arg(long)]
    pub port: Option<u16>,
    /// Directory holding all persistent data.
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
    /// Default group synchronization interval for new sessions.
    #[arg(long)]
    pub sync_interval_ms: Option<u64>,
    /// Release a lock whose holder has been idle this long.
    #[arg(long)]
    pub lock_timeout_ms: Option<u64>,
    /// TOML file with further settings.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Address to bind.
    #[arg(long)]
    pub bind: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdminBootstrap {
    pub username: String,
    pub credential: String,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    port: Option<u16>,
    data_dir: Option<PathBuf>,
    bind: Option<String>,
    sync_interval_ms: Option<u64>,
    lock_timeout_ms: Option<u64>,
    token_idle_expiry_ms: Option<u64>,
    pepper: Option<String>,
    admin: Option<AdminBootstrap>,
}

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub bind: String,
    pub port: u16,
    pub data_dir: PathBuf,
    pub sync_interval_ms: u64,
    pub lock_timeout_ms: Option<u64>,
    pub token_idle_expiry_ms: u64,
    /// Secret mixed into credential digests. When absent one is generated
    /// and kept in the data directory.
    pub pepper: Option<String>,
    /// Administrator created on first start if no account has its name.
    pub admin: Option<AdminBootstrap>,
    /// Use the fast hashing profile. Test servers only.
    pub fast_hashing: bool,
}

impl ServerConfig {
    pub fn new(port: u16, data_dir: impl Into<PathBuf>) -> Self {
        ServerConfig {
            bind: "0.0.0.0".into(),
            port,
            data_dir: data_dir.into(),
            sync_interval_ms: DEFAULT_SYNC_INTERVAL_MS,
            lock_timeout_ms: None,
            token_idle_expiry_ms: DEFAULT_TOKEN_IDLE_MS,
            pepper: None,
            admin: None,
            fast_hashing: false,
        }
    }

    /// Merges defaults, the config file, environment and flags, later
    /// sources winning.
    pub fn resolve(cli: &Cli, env: impl Fn(&str) -> Option<String>) -> Result<ServerConfig, ConfigError> {
        let file = match &cli.config {
            Some(path) => read_file(path)?,
            None => FileConfig::default(),
        };
        let env_port = env("GEOLAB_PORT")
            .map(|v| v.parse::<u16>().map_err(|_| ConfigError::BadValue { name: "GEOLAB_PORT", value: v }))
            .transpose()?;
        let env_dir = env("GEOLAB_DATA_DIR").map(PathBuf::from);

        let port = cli.port.or(env_port).or(file.port).ok_or(ConfigError::Missing("port"))?;
        let data_dir = cli
            .data_dir
            .clone()
            .or(env_dir)
            .or(file.data_dir)
            .ok_or(ConfigError::Missing("data_dir"))?;
        let sync_interval_ms = cli.sync_interval_ms.or(file.sync_interval_ms).unwrap_or(DEFAULT_SYNC_INTERVAL_MS);
        if sync_interval_ms == 0 {
            return Err(ConfigError::BadValue { name: "sync_interval_ms", value: "0".into() });
        }
        let lock_timeout_ms = cli.lock_timeout_ms.or(file.lock_timeout_ms);
        if lock_timeout_ms == Some(0) {
            return Err(ConfigError::BadValue { name: "lock_timeout_ms", value: "0".into() });
        }
        Ok(ServerConfig {
            bind: cli.bind.clone().or(file.bind).unwrap_or_else(|| "0.0.0.0".into()),
            port,
            data_dir,
            sync_interval_ms,
            lock_timeout_ms,
            token_idle_expiry_ms: file.token_idle_expiry_ms.unwrap_or(DEFAULT_TOKEN_IDLE_MS),
            pepper: file.pepper,
            admin: file.admin,
            fast_hashing: false,
        })
    }
}

fn read_file(path: &Path) -> Result<FileConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.into(), source })?;
    toml::from_str(&text).map_err(|source| ConfigError::Parse { path: path.into(), source })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn cli(args: &[&str]) -> Cli {
        Cli::parse_from(std::iter::once("geolab-server").chain(args.iter().copied()))
    }

    fn env(pairs: &[(&str, &str)]) -> impl Fn(&str) -> Option<String> {
        let map: HashMap<String, String> = pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        move |k| map.get(k).cloned()
    }

    #[test]
    fn flags_beat_env_beat_file() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("geolab.toml");
        std::fs::write(
            &file,
            "port = 1000\ndata_dir = \"/file\"\nsync_interval_ms = 500\n[admin]\nusername = \"root\"\ncredential = \"pw\"\n",
        )
        .unwrap();
        let path = file.to_str().unwrap();

        let c = ServerConfig::resolve(&cli(&["--config", path]), env(&[])).unwrap();
        assert_eq!((c.port, c.data_dir.to_str().unwrap(), c.sync_interval_ms), (1000, "/file", 500));
        assert_eq!(c.admin.unwrap().username, "root");

        let e = env(&[("GEOLAB_PORT", "2000"), ("GEOLAB_DATA_DIR", "/env")]);
        let c = ServerConfig::resolve(&cli(&["--config", path]), &e).unwrap();
        assert_eq!((c.port, c.data_dir.to_str().unwrap()), (2000, "/env"));

        let c = ServerConfig::resolve(&cli(&["--config", path, "--port", "3000", "--data-dir", "/flag"]), &e).unwrap();
        assert_eq!((c.port, c.data_dir.to_str().unwrap()), (3000, "/flag"));
    }

    #[test]
    fn defaults_and_errors() {
        let c = ServerConfig::resolve(&cli(&["--port", "1", "--data-dir", "/d"]), env(&[])).unwrap();
        assert_eq!(c.sync_interval_ms, 20_000);
        assert_eq!(c.lock_timeout_ms, None);
        assert!(matches!(
            ServerConfig::resolve(&cli(&["--data-dir", "/d"]), env(&[])),
            Err(ConfigError::Missing("port"))
        ));
        assert!(matches!(
            ServerConfig::resolve(&cli(&["--data-dir", "/d"]), env(&[("GEOLAB_PORT", "x")])),
            Err(ConfigError::BadValue { .. })
        ));
        assert!(matches!(
            ServerConfig::resolve(&cli(&["--port", "1", "--data-dir", "/d", "--sync-interval-ms", "0"]), env(&[])),
            Err(ConfigError::BadValue { .. })
        ));
    }

    #[test]
    fn unknown_file_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("bad.toml");
        std::fs::write(&file, "prot = 1\n").unwrap();
        let r = ServerConfig::resolve(&cli(&["--config", file.to_str().unwrap()]), env(&[]));
        assert!(matches!(r, Err(ConfigError::Parse { .. })));
    }
}

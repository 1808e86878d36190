use thiserror::Error;

use crate::key::Namespace;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("store is closed")]
    StoreClosed,
    #[error("i/o failure: {0}")]
    IoFailure(#[from] std::io::Error),
    #[error("namespace {0} does not accept appends")]
    NotAppendable(Namespace),
    #[error("invalid record id {0:?}")]
    InvalidKey(String),
    #[error("unknown namespace {0:?}")]
    UnknownNamespace(String),
}

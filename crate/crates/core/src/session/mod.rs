//! Collaborative sessions: one shared construction per work group, guarded
//! by a single edit lock, pushed to members on a fixed schedule.

mod engine;
mod model;
mod state;

pub use engine::{SessionEngine, SessionHandle, SessionResult, StoreSink, Worker};
pub use model::*;
pub use state::{empty_payload, validate_config, NullSink, OpenParams, SessionSink, SessionState, MAILBOX_CAPACITY};

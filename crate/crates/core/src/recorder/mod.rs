//! Recording of stand-alone work as an event stream, and teacher-side
//! replay of those streams.

mod drag;
mod jsonl;
mod model;
mod replay;
mod service;

pub use drag::{DragCoalescer, DRAG_SAMPLE_MS};
pub use jsonl::{export_jsonl, import_jsonl, LOG_FORMAT_NAME, LOG_FORMAT_VERSION};
pub use model::*;
pub use replay::{apply_event, reconstruct_at, replay_schedule, ReplayCursor, ReplayStep};
pub use service::Recorder;

//! Geometry construction kernel.
//!
//! A [`Construction`] is an ordered list of [`ConstructionStep`]s. Each step
//! refers only to steps that appear before it, so the list order is always a
//! valid topological order of the dependency DAG. Constructions are plain
//! values: every mutation returns a new construction and leaves the original
//! untouched, which makes snapshotting for sync and replay trivial.
//!
//! [`evaluate`] turns a construction into concrete coordinates in a single
//! pass. Degenerate configurations (parallel lines, coincident points,
//! circles that do not meet) evaluate to [`GeometryValue::Undefined`] rather
//! than failing, so dragging a free point never breaks a live session.

mod construction;
mod error;
mod eval;
mod format;
mod step;
mod value;

pub use construction::Construction;
pub use error::{ConstructionError, FormatError};
pub use eval::{evaluate, Evaluation};
pub use format::{parse_construction, serialize_construction, FORMAT_NAME, FORMAT_VERSION};
pub use step::{Branch, ConstructionStep, StepId, StepKind, ValueKind};
pub use value::{GeometryValue, EPSILON, TANGENCY_EPSILON};

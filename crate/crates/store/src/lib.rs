//! Embedded record store.
//!
//! Records live in nine fixed namespaces. Each namespace is a directory
//! holding a `MANIFEST` and one append-only segment file; the in-memory index
//! is rebuilt by scanning segments on open. Transactions may span namespaces:
//! their mutations are written to each namespace's segment first and become
//! visible only once a commit marker reaches `<data-dir>/COMMITS`. Frames
//! carry a CRC, so a torn tail is detected and truncated during recovery.
//!
//! Any write failure poisons the handle; reopening the directory recovers the
//! last acknowledged state.

mod error;
mod frame;
mod key;
mod store;

pub use error::StoreError;
pub use key::{Namespace, RecordKey};
pub use store::{FaultPlan, Store, StoreOptions, Transaction};

pub type Result<T, E = StoreError> = std::result::Result<T, E>;

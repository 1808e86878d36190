//! Platform services of the geometry lab: user accounts and permissions,
//! lock-synchronized collaborative sessions, and recording and replay of
//! stand-alone student work.

pub mod accounts;
pub mod clock;
pub mod ids;
pub mod recorder;
pub mod session;

pub use clock::{Clock, ManualClock, SystemClock, TokioClock};

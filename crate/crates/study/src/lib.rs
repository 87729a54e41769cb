//! Observer-study sessions backed by an append-only event log.
//!
//! Every mutation is written to the log before it is applied, so replaying
//! the log rebuilds the exact service state after a restart.

pub mod events;
pub mod http;
pub mod log;
pub mod service;
pub mod state;

pub use events::{Event, EventRecord, StudyItem};
pub use log::{replay_log, EventSink, FileLog, MemoryLog, Replay, ReplayError};
pub use service::{
    session_report, CreateRequest, DirImages, ImageSource, ItemImage, NextItem, RatingAck, RatingRequest, SessionView,
    StudyError, StudyService,
};
pub use state::{ApplyError, SessionStatus, StudySession, StudyState};

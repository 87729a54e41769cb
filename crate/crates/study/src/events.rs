use chrono::{DateTime, Utc};
use lesionbench::scoring::{ConfidenceLevel, Truth};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StudyItem {
    pub item_id: String,
    pub truth: Truth,
    /// Patch file, relative to the image root.
    pub path: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Event {
    SessionCreated { session_id: String, observer_id: String, n_per_class: usize, seed: u64, items: Vec<StudyItem> },
    RatingRecorded { session_id: String, item_id: String, level: ConfidenceLevel, idempotency_key: String },
    SessionCompleted { session_id: String },
}

impl Event {
    pub fn session_id(&self) -> &str {
        match self {
            Event::SessionCreated { session_id, .. }
            | Event::RatingRecorded { session_id, .. }
            | Event::SessionCompleted { session_id } => session_id,
        }
    }
}

/// One line of the log. Sequence numbers start at 1 and have no gaps.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventRecord {
    pub seq: u64,
    pub at: DateTime<Utc>,
    #[serde(flatten)]
    pub event: Event,
}

impl EventRecord {
    /// The record as a single JSON line including the trailing newline.
    pub fn to_line(&self) -> String {
        let mut line = serde_json::to_string(self).expect("events serialize");
        line.push('\n');
        line
    }
}

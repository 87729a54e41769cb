use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use lesionbench::scoring::{ConfidenceLevel, Rating};
use serde::Serialize;
use thiserror::Error;

use crate::events::{Event, EventRecord, StudyItem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionStatus {
    Active,
    Complete,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudySession {
    pub session_id: String,
    pub observer_id: String,
    pub n_per_class: usize,
    pub seed: u64,
    pub items: Vec<StudyItem>,
    pub ratings: Vec<Rating>,
    pub created_at: DateTime<Utc>,
    /// Set once the completion event has been logged.
    pub completed_at: Option<DateTime<Utc>>,
}

impl StudySession {
    /// Index of the next unrated item.
    pub fn cursor(&self) -> usize {
        self.ratings.len()
    }

    pub fn status(&self) -> SessionStatus {
        if self.cursor() == self.items.len() {
            SessionStatus::Complete
        } else {
            SessionStatus::Active
        }
    }

    pub fn current_item(&self) -> Option<&StudyItem> {
        self.items.get(self.cursor())
    }
}

/// Outcome remembered for an idempotency key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyedRating {
    pub item_id: String,
    pub level: ConfidenceLevel,
    pub cursor: usize,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ApplyError {
    #[error("expected sequence number {expected}, found {found}")]
    SequenceGap { expected: u64, found: u64 },
    #[error("session {0} already exists")]
    DuplicateSession(String),
    #[error("unknown session {0}")]
    UnknownSession(String),
    #[error("session {session_id}: rating for {found} but the next item is {expected:?}")]
    OutOfOrder { session_id: String, expected: Option<String>, found: String },
    #[error("session {session_id}: idempotency key {key:?} reused")]
    DuplicateKey { session_id: String, key: String },
    #[error("session {0} cannot complete: unrated items remain or already completed")]
    BadCompletion(String),
}

/// Everything the service knows, rebuilt purely from events.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StudyState {
    pub sessions: BTreeMap<String, StudySession>,
    pub keys: BTreeMap<(String, String), KeyedRating>,
    pub last_seq: u64,
}

impl StudyState {
    pub fn session(&self, id: &str) -> Option<&StudySession> {
        self.sessions.get(id)
    }

    pub fn next_seq(&self) -> u64 {
        self.last_seq + 1
    }

    pub fn keyed(&self, session_id: &str, key: &str) -> Option<&KeyedRating> {
        self.keys.get(&(session_id.to_string(), key.to_string()))
    }

    /// Applies one record. On error the state is unchanged.
    pub fn apply(&mut self, record: &EventRecord) -> Result<(), ApplyError> {
        if record.seq != self.next_seq() {
            return Err(ApplyError::SequenceGap { expected: self.next_seq(), found: record.seq });
        }
        match &record.event {
            Event::SessionCreated { session_id, observer_id, n_per_class, seed, items } => {
                if self.sessions.contains_key(session_id) {
                    return Err(ApplyError::DuplicateSession(session_id.clone()));
                }
                self.sessions.insert(
                    session_id.clone(),
                    StudySession {
                        session_id: session_id.clone(),
                        observer_id: observer_id.clone(),
                        n_per_class: *n_per_class,
                        seed: *seed,
                        items: items.clone(),
                        ratings: Vec::with_capacity(items.len()),
                        created_at: record.at,
                        completed_at: None,
                    },
                );
            }
            Event::RatingRecorded { session_id, item_id, level, idempotency_key } => {
                let key = (session_id.clone(), idempotency_key.clone());
                if self.keys.contains_key(&key) {
                    return Err(ApplyError::DuplicateKey {
                        session_id: session_id.clone(),
                        key: idempotency_key.clone(),
                    });
                }
                let session =
                    self.sessions.get_mut(session_id).ok_or_else(|| ApplyError::UnknownSession(session_id.clone()))?;
                let current = session.current_item();
                if current.map(|i| &i.item_id) != Some(item_id) {
                    return Err(ApplyError::OutOfOrder {
                        session_id: session_id.clone(),
                        expected: current.map(|i| i.item_id.clone()),
                        found: item_id.clone(),
                    });
                }
                let truth = current.expect("checked above").truth;
                session.ratings.push(Rating {
                    item_id: item_id.clone(),
                    truth,
                    level: *level,
                    observer_id: session.observer_id.clone(),
                    timestamp: record.at,
                });
                let cursor = session.cursor();
                self.keys.insert(key, KeyedRating { item_id: item_id.clone(), level: *level, cursor });
            }
            Event::SessionCompleted { session_id } => {
                let session =
                    self.sessions.get_mut(session_id).ok_or_else(|| ApplyError::UnknownSession(session_id.clone()))?;
                if session.status() != SessionStatus::Complete || session.completed_at.is_some() {
                    return Err(ApplyError::BadCompletion(session_id.clone()));
                }
                session.completed_at = Some(record.at);
            }
        }
        self.last_seq = record.seq;
        Ok(())
    }
}

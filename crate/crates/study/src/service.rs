use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use base64::Engine as _;
use chrono::{DateTime, Utc};
use lesionbench::patchio::{read_pgm, Manifest, Patch};
use lesionbench::rng::seeded;
use lesionbench::scoring::{sample_balanced, ConfidenceLevel, RocReport, ScoringError, Truth};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::events::{Event, EventRecord, StudyItem};
use crate::log::{EventSink, FileLog, ReplayError};
use crate::state::{SessionStatus, StudyState};

#[derive(Debug, Error)]
pub enum StudyError {
    #[error("unknown session {0}")]
    UnknownSession(String),
    #[error("next item is {expected}, got a rating for {found}")]
    Sequencing { expected: String, found: String },
    #[error("session {0} is already complete")]
    AlreadyComplete(String),
    #[error("session {session_id} is not complete ({cursor} of {total} rated)")]
    NotComplete { session_id: String, cursor: usize, total: usize },
    #[error("idempotency key {0:?} was already used for a different rating")]
    IdempotencyConflict(String),
    #[error("invalid request: {0}")]
    Invalid(String),
    #[error(transparent)]
    Sampling(#[from] ScoringError),
    #[error("event log append failed: {0}")]
    Storage(#[from] std::io::Error),
    #[error("cannot load image {path}: {reason}")]
    Image { path: String, reason: String },
    #[error(transparent)]
    Replay(#[from] ReplayError),
}

pub type Result<T, E = StudyError> = std::result::Result<T, E>;

/// Loads the patch behind a study item path.
pub trait ImageSource: Send + Sync {
    fn load(&self, path: &str) -> std::result::Result<Patch, String>;
}

impl<F> ImageSource for F
where
    F: Fn(&str) -> std::result::Result<Patch, String> + Send + Sync,
{
    fn load(&self, path: &str) -> std::result::Result<Patch, String> {
        self(path)
    }
}

/// PGM files under a root directory.
#[derive(Debug, Clone)]
pub struct DirImages {
    pub root: PathBuf,
}

impl DirImages {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        DirImages { root: root.into() }
    }
}

impl ImageSource for DirImages {
    fn load(&self, path: &str) -> std::result::Result<Patch, String> {
        let bytes = std::fs::read(self.root.join(path)).map_err(|e| e.to_string())?;
        read_pgm(&bytes).map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CreateRequest {
    pub observer_id: String,
    pub n_per_class: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingRequest {
    pub item_id: String,
    pub level: ConfidenceLevel,
    pub idempotency_key: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingAck {
    pub cursor: usize,
    pub total: usize,
    pub complete: bool,
}

/// Observer-facing session summary; carries no truth.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SessionView {
    pub session_id: String,
    pub observer_id: String,
    pub cursor: usize,
    pub total: usize,
    pub status: SessionStatus,
    pub created_at: DateTime<Utc>,
}

/// 8-bit greyscale pixels, row-major, base64 encoded.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemImage {
    pub width: usize,
    pub height: usize,
    pub pixels_base64: String,
}

impl ItemImage {
    pub fn from_patch(p: &Patch) -> Self {
        ItemImage {
            width: p.width(),
            height: p.height(),
            pixels_base64: base64::engine::general_purpose::STANDARD.encode(p.to_u8()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NextItem {
    Item {
        item_id: String,
        /// Zero-based position in the session.
        index: usize,
        total: usize,
        image: ItemImage,
    },
    Complete {
        complete: bool,
    },
}

type Clock = Box<dyn Fn() -> DateTime<Utc> + Send + Sync>;

/// Study sessions over one manifest and one event log.
///
/// Mutations are serialised by the writer lock and logged before they are
/// applied to the state; reads only take the state lock.
pub struct StudyService {
    writer: Mutex<Box<dyn EventSink>>,
    state: RwLock<StudyState>,
    manifest: Manifest,
    images: Box<dyn ImageSource>,
    clock: Clock,
}

impl StudyService {
    /// `state` must be the replay of everything already in `sink`.
    pub fn new(
        sink: Box<dyn EventSink>,
        state: StudyState,
        manifest: Manifest,
        images: Box<dyn ImageSource>,
    ) -> Result<Self> {
        Self::with_clock(sink, state, manifest, images, Box::new(Utc::now))
    }

    pub fn with_clock(
        sink: Box<dyn EventSink>,
        state: StudyState,
        manifest: Manifest,
        images: Box<dyn ImageSource>,
        clock: Clock,
    ) -> Result<Self> {
        let service = StudyService { writer: Mutex::new(sink), state: RwLock::new(state), manifest, images, clock };
        service.complete_pending()?;
        Ok(service)
    }

    /// Opens (or creates) a log file and resumes from its contents.
    pub fn open(log_path: &Path, manifest: Manifest, images: Box<dyn ImageSource>) -> Result<Self> {
        let (log, replay) = FileLog::open(log_path)?;
        Self::new(Box::new(log), replay.state, manifest, images)
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    pub fn snapshot(&self) -> StudyState {
        self.read().clone()
    }

    fn read(&self) -> std::sync::RwLockReadGuard<'_, StudyState> {
        self.state.read().expect("state lock poisoned")
    }

    /// Appends then applies. Callers hold the writer lock and have
    /// validated the events against the current state.
    fn commit(&self, sink: &mut Box<dyn EventSink>, events: Vec<Event>) -> Result<()> {
        let at = (self.clock)();
        let first = self.read().next_seq();
        let records: Vec<EventRecord> =
            events.into_iter().enumerate().map(|(i, event)| EventRecord { seq: first + i as u64, at, event }).collect();
        sink.append(&records)?;
        let mut state = self.state.write().expect("state lock poisoned");
        for r in &records {
            state.apply(r).expect("validated before append");
        }
        Ok(())
    }

    /// Logs completion for sessions whose last rating was logged without
    /// it, as after a crash between the two records.
    fn complete_pending(&self) -> Result<()> {
        let mut sink = self.writer.lock().expect("writer lock poisoned");
        let pending: Vec<Event> = self
            .read()
            .sessions
            .values()
            .filter(|s| s.status() == SessionStatus::Complete && s.completed_at.is_none())
            .map(|s| Event::SessionCompleted { session_id: s.session_id.clone() })
            .collect();
        if !pending.is_empty() {
            self.commit(&mut sink, pending)?;
        }
        Ok(())
    }

    pub fn create_study(&self, req: &CreateRequest) -> Result<SessionView> {
        if req.observer_id.trim().is_empty() {
            return Err(StudyError::Invalid("observer_id must not be empty".into()));
        }
        if req.n_per_class == 0 {
            return Err(StudyError::Invalid("n_per_class must be at least 1".into()));
        }
        let entries = sample_balanced(&self.manifest, req.n_per_class, &mut seeded(req.seed))?;
        let mut sink = self.writer.lock().expect("writer lock poisoned");
        let session_id = format!("s{:06}", self.read().sessions.len() + 1);
        let items = entries
            .into_iter()
            .enumerate()
            .map(|(i, e)| StudyItem {
                item_id: format!("{session_id}-{:03}", i + 1),
                truth: Truth::from_label(e.label).expect("balanced sample holds lesions only"),
                path: e.path,
            })
            .collect();
        self.commit(
            &mut sink,
            vec![Event::SessionCreated {
                session_id: session_id.clone(),
                observer_id: req.observer_id.clone(),
                n_per_class: req.n_per_class,
                seed: req.seed,
                items,
            }],
        )?;
        drop(sink);
        self.session_view(&session_id)
    }

    pub fn session_view(&self, session_id: &str) -> Result<SessionView> {
        let state = self.read();
        let s = state.session(session_id).ok_or_else(|| StudyError::UnknownSession(session_id.to_string()))?;
        Ok(SessionView {
            session_id: s.session_id.clone(),
            observer_id: s.observer_id.clone(),
            cursor: s.cursor(),
            total: s.items.len(),
            status: s.status(),
            created_at: s.created_at,
        })
    }

    pub fn next_item(&self, session_id: &str) -> Result<NextItem> {
        let (item, index, total) = {
            let state = self.read();
            let s = state.session(session_id).ok_or_else(|| StudyError::UnknownSession(session_id.to_string()))?;
            match s.current_item() {
                None => return Ok(NextItem::Complete { complete: true }),
                Some(item) => (item.clone(), s.cursor(), s.items.len()),
            }
        };
        let patch =
            self.images.load(&item.path).map_err(|reason| StudyError::Image { path: item.path.clone(), reason })?;
        Ok(NextItem::Item { item_id: item.item_id, index, total, image: ItemImage::from_patch(&patch) })
    }

    /// Records a rating for the item at the cursor. A request repeating an
    /// earlier idempotency key returns the earlier outcome and logs nothing.
    pub fn record_rating(&self, session_id: &str, req: &RatingRequest) -> Result<RatingAck> {
        if req.idempotency_key.is_empty() {
            return Err(StudyError::Invalid("idempotency_key must not be empty".into()));
        }
        let mut sink = self.writer.lock().expect("writer lock poisoned");
        let events = {
            let state = self.read();
            let s = state.session(session_id).ok_or_else(|| StudyError::UnknownSession(session_id.to_string()))?;
            let total = s.items.len();
            if let Some(prev) = state.keyed(session_id, &req.idempotency_key) {
                return if prev.item_id == req.item_id && prev.level == req.level {
                    Ok(RatingAck { cursor: prev.cursor, total, complete: prev.cursor == total })
                } else {
                    Err(StudyError::IdempotencyConflict(req.idempotency_key.clone()))
                };
            }
            let Some(current) = s.current_item() else {
                return Err(StudyError::AlreadyComplete(session_id.to_string()));
            };
            if current.item_id != req.item_id {
                return Err(StudyError::Sequencing { expected: current.item_id.clone(), found: req.item_id.clone() });
            }
            let mut events = vec![Event::RatingRecorded {
                session_id: session_id.to_string(),
                item_id: req.item_id.clone(),
                level: req.level,
                idempotency_key: req.idempotency_key.clone(),
            }];
            if s.cursor() + 1 == total {
                events.push(Event::SessionCompleted { session_id: session_id.to_string() });
            }
            events
        };
        self.commit(&mut sink, events)?;
        drop(sink);
        let view = self.session_view(session_id)?;
        Ok(RatingAck { cursor: view.cursor, total: view.total, complete: view.status == SessionStatus::Complete })
    }

    pub fn report(&self, session_id: &str) -> Result<RocReport> {
        session_report(&self.read(), session_id)
    }
}

/// Report for a completed session in `state`.
pub fn session_report(state: &StudyState, session_id: &str) -> Result<RocReport> {
    let s = state.session(session_id).ok_or_else(|| StudyError::UnknownSession(session_id.to_string()))?;
    if s.status() != SessionStatus::Complete {
        return Err(StudyError::NotComplete {
            session_id: session_id.to_string(),
            cursor: s.cursor(),
            total: s.items.len(),
        });
    }
    Ok(RocReport::from_ratings(&s.ratings)?)
}

use std::fs::{File, OpenOptions};
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use thiserror::Error;

use crate::events::EventRecord;
use crate::state::{ApplyError, StudyState};

/// Durable destination for event records.
pub trait EventSink: Send {
    /// Writes all records or fails; records are acknowledged only after
    /// this returns.
    fn append(&mut self, records: &[EventRecord]) -> io::Result<()>;
}

/// Line-delimited JSON log file, synced after every append.
#[derive(Debug)]
pub struct FileLog {
    file: File,
    path: PathBuf,
}

impl FileLog {
    /// Opens or creates the log, replays it and truncates a corrupt tail
    /// so later appends start on a clean line.
    pub fn open(path: impl AsRef<Path>) -> Result<(Self, Replay), ReplayError> {
        let path = path.as_ref().to_path_buf();
        let mut file = OpenOptions::new().read(true).append(true).create(true).open(&path)?;
        let mut bytes = Vec::new();
        file.read_to_end(&mut bytes)?;
        let replay = replay_log(&bytes)?;
        if replay.valid_len < bytes.len() {
            file.set_len(replay.valid_len as u64)?;
            file.sync_data()?;
        }
        for w in &replay.warnings {
            tracing::warn!(log = %path.display(), "{w}");
        }
        Ok((FileLog { file, path }, replay))
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

impl EventSink for FileLog {
    fn append(&mut self, records: &[EventRecord]) -> io::Result<()> {
        let text: String = records.iter().map(EventRecord::to_line).collect();
        let before = self.file.metadata()?.len();
        let written = self.file.write_all(text.as_bytes()).and_then(|()| self.file.sync_data());
        if written.is_err() {
            // Drop any partial line so the next append starts cleanly.
            let _ = self.file.set_len(before);
        }
        written
    }
}

/// In-memory log whose bytes stay readable through a shared handle.
#[derive(Debug, Clone, Default)]
pub struct MemoryLog {
    bytes: Arc<Mutex<Vec<u8>>>,
}

impl MemoryLog {
    pub fn bytes(&self) -> Vec<u8> {
        self.bytes.lock().expect("log lock").clone()
    }
}

impl EventSink for MemoryLog {
    fn append(&mut self, records: &[EventRecord]) -> io::Result<()> {
        let mut bytes = self.bytes.lock().expect("log lock");
        for r in records {
            bytes.extend_from_slice(r.to_line().as_bytes());
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("log line {line}: {reason}")]
    Corrupt { line: usize, reason: String },
    #[error("log line {line}: {source}")]
    Integrity {
        line: usize,
        #[source]
        source: ApplyError,
    },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Replay {
    pub state: StudyState,
    pub records: Vec<EventRecord>,
    /// Length of the accepted prefix of the input.
    pub valid_len: usize,
    pub warnings: Vec<String>,
}

/// Rebuilds state from log bytes.
///
/// Only newline-terminated records count. An unterminated or unparsable
/// final record is dropped with a warning; an unparsable record followed
/// by others, or any record that does not apply, is an error.
pub fn replay_log(bytes: &[u8]) -> Result<Replay, ReplayError> {
    let mut state = StudyState::default();
    let mut records = Vec::new();
    let mut warnings = Vec::new();
    let mut offset = 0;
    let mut line = 0;
    while offset < bytes.len() {
        line += 1;
        let Some(nl) = bytes[offset..].iter().position(|&b| b == b'\n') else {
            warnings.push(format!("dropped unterminated record at line {line} ({} bytes)", bytes.len() - offset));
            break;
        };
        let end = offset + nl + 1;
        let parsed = std::str::from_utf8(&bytes[offset..end - 1])
            .map_err(|e| e.to_string())
            .and_then(|text| serde_json::from_str::<EventRecord>(text).map_err(|e| e.to_string()));
        let record = match parsed {
            Ok(r) => r,
            Err(reason) if end == bytes.len() => {
                warnings.push(format!("dropped corrupt final record at line {line}: {reason}"));
                break;
            }
            Err(reason) => return Err(ReplayError::Corrupt { line, reason }),
        };
        state.apply(&record).map_err(|source| ReplayError::Integrity { line, source })?;
        records.push(record);
        offset = end;
    }
    Ok(Replay { state, records, valid_len: offset, warnings })
}

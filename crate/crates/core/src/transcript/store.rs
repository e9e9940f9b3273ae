//! Directory-backed transcript storage.
//!
//! Live sessions are written ahead to `<id>.wal`: a header line followed by
//! one JSON event per line. Finalizing writes `<id>.json` atomically and
//! removes the log. Reading a session that is still live replays its log.

use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{AgentProfile, OrderingError, SessionStatus, SessionTranscript, TranscriptEvent, SCHEMA_VERSION};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("session `{0}` not found")]
    NotFound(String),
    #[error("invalid session id `{0}`")]
    InvalidId(String),
    #[error("session `{0}` already exists")]
    AlreadyExists(String),
    #[error("corrupt session file {path} at byte {offset}: {reason}")]
    Integrity {
        path: PathBuf,
        offset: u64,
        reason: String,
    },
    #[error("unsupported transcript schema version {0}")]
    UnsupportedVersion(u32),
    #[error(transparent)]
    Ordering(#[from] OrderingError),
    #[error("session `{0}` is already finalized")]
    Finalized(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// How hard appends push bytes to disk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Durability {
    /// fsync after every append.
    #[default]
    Sync,
    /// Flush to the OS only.
    Flush,
}

#[derive(Debug, Clone, Default)]
pub struct SessionFilter {
    pub script_id: Option<String>,
    /// Inclusive `YYYY-MM-DD` bounds.
    pub date_from: Option<String>,
    pub date_to: Option<String>,
    pub status: Option<SessionStatus>,
}

impl SessionFilter {
    fn matches(&self, t: &SessionTranscript) -> bool {
        if self.script_id.as_deref().is_some_and(|s| s != t.script_id) {
            return false;
        }
        if let Some(status) = self.status {
            if t.status != status {
                return false;
            }
        }
        let date = t.date.as_deref();
        if let Some(from) = &self.date_from {
            if date.is_none_or(|d| d < from.as_str()) {
                return false;
            }
        }
        if let Some(to) = &self.date_to {
            if date.is_none_or(|d| d > to.as_str()) {
                return false;
            }
        }
        true
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct WalHeader {
    v: u32,
    session_id: String,
    script_id: String,
    agent_profile: AgentProfile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    date: Option<String>,
}

#[derive(Debug, Clone)]
pub struct TranscriptStore {
    dir: PathBuf,
    durability: Durability,
}

pub fn is_valid_session_id(id: &str) -> bool {
    !id.is_empty()
        && id.len() <= 128
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

impl TranscriptStore {
    /// Open (creating if needed) a store rooted at `dir`.
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        Ok(Self {
            dir,
            durability: Durability::default(),
        })
    }

    pub fn with_durability(mut self, durability: Durability) -> Self {
        self.durability = durability;
        self
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, session_id: &str) -> PathBuf {
        self.dir.join(format!("{session_id}.json"))
    }

    fn wal_path(&self, session_id: &str) -> PathBuf {
        self.dir.join(format!("{session_id}.wal"))
    }

    fn check_id(session_id: &str) -> Result<(), StoreError> {
        if is_valid_session_id(session_id) {
            Ok(())
        } else {
            Err(StoreError::InvalidId(session_id.to_string()))
        }
    }

    pub fn exists(&self, session_id: &str) -> bool {
        self.path_for(session_id).exists() || self.wal_path(session_id).exists()
    }

    /// Start a live session log.
    pub fn create(&self, transcript: SessionTranscript) -> Result<SessionWriter, StoreError> {
        Self::check_id(&transcript.session_id)?;
        if self.exists(&transcript.session_id) {
            return Err(StoreError::AlreadyExists(transcript.session_id));
        }
        let path = self.wal_path(&transcript.session_id);
        let mut file = OpenOptions::new()
            .create_new(true)
            .append(true)
            .open(&path)
            .map_err(io_err(&path))?;
        let header = WalHeader {
            v: SCHEMA_VERSION,
            session_id: transcript.session_id.clone(),
            script_id: transcript.script_id.clone(),
            agent_profile: transcript.agent_profile,
            date: transcript.date.clone(),
        };
        let mut line = serde_json::to_string(&header).expect("header serializes");
        line.push('\n');
        for event in &transcript.events {
            line.push_str(&serde_json::to_string(event).expect("event serializes"));
            line.push('\n');
        }
        file.write_all(line.as_bytes()).map_err(io_err(&path))?;
        let mut writer = SessionWriter {
            store: self.clone(),
            transcript,
            file: Some(file),
        };
        writer.sync()?;
        Ok(writer)
    }

    /// Write a complete transcript in one step (atomic replace).
    pub fn save(&self, transcript: &SessionTranscript) -> Result<PathBuf, StoreError> {
        Self::check_id(&transcript.session_id)?;
        transcript.check_order()?;
        let path = self.path_for(&transcript.session_id);
        write_atomic(&path, transcript.to_json().as_bytes())?;
        let wal = self.wal_path(&transcript.session_id);
        if wal.exists() {
            fs::remove_file(&wal).map_err(io_err(&wal))?;
        }
        Ok(path)
    }

    pub fn load(&self, session_id: &str) -> Result<SessionTranscript, StoreError> {
        Self::check_id(session_id)?;
        let path = self.path_for(session_id);
        if path.exists() {
            return load_document(&path);
        }
        let wal = self.wal_path(session_id);
        if wal.exists() {
            return load_wal(&wal);
        }
        Err(StoreError::NotFound(session_id.to_string()))
    }

    /// Raw bytes of a finalized session document.
    pub fn load_bytes(&self, session_id: &str) -> Result<Vec<u8>, StoreError> {
        Self::check_id(session_id)?;
        let path = self.path_for(session_id);
        match fs::read(&path) {
            Ok(bytes) => Ok(bytes),
            Err(e) if e.kind() == io::ErrorKind::NotFound => {
                if self.wal_path(session_id).exists() {
                    Ok(self.load(session_id)?.to_json().into_bytes())
                } else {
                    Err(StoreError::NotFound(session_id.to_string()))
                }
            }
            Err(e) => Err(io_err(&path)(e)),
        }
    }

    /// Session ids matching `filter`, sorted.
    pub fn list_sessions(&self, filter: &SessionFilter) -> Result<Vec<String>, StoreError> {
        let mut ids = Vec::new();
        for entry in fs::read_dir(&self.dir).map_err(io_err(&self.dir))? {
            let entry = entry.map_err(io_err(&self.dir))?;
            let path = entry.path();
            let Some(ext) = path.extension().and_then(|e| e.to_str()) else {
                continue;
            };
            if ext != "json" && ext != "wal" {
                continue;
            }
            let Some(id) = path.file_stem().and_then(|s| s.to_str()) else {
                continue;
            };
            if !is_valid_session_id(id) || (ext == "wal" && self.path_for(id).exists()) {
                continue;
            }
            let transcript = self.load(id)?;
            if filter.matches(&transcript) {
                ids.push(id.to_string());
            }
        }
        ids.sort();
        ids.dedup();
        Ok(ids)
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), StoreError> {
    let tmp = path.with_extension("json.tmp");
    {
        let mut file = File::create(&tmp).map_err(io_err(&tmp))?;
        file.write_all(bytes).map_err(io_err(&tmp))?;
        file.sync_all().map_err(io_err(&tmp))?;
    }
    fs::rename(&tmp, path).map_err(io_err(path))
}

fn byte_offset(text: &str, line: usize, column: usize) -> u64 {
    if line == 0 {
        return 0;
    }
    let line_start: usize = text
        .split_inclusive('\n')
        .take(line - 1)
        .map(str::len)
        .sum();
    (line_start + column.saturating_sub(1)).min(text.len()) as u64
}

fn load_document(path: &Path) -> Result<SessionTranscript, StoreError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let transcript: SessionTranscript = serde_json::from_str(&text).map_err(|e| StoreError::Integrity {
        path: path.to_path_buf(),
        offset: byte_offset(&text, e.line(), e.column()),
        reason: e.to_string(),
    })?;
    if transcript.v != SCHEMA_VERSION {
        return Err(StoreError::UnsupportedVersion(transcript.v));
    }
    transcript.check_order().map_err(|e| StoreError::Integrity {
        path: path.to_path_buf(),
        offset: 0,
        reason: e.to_string(),
    })?;
    Ok(transcript)
}

fn load_wal(path: &Path) -> Result<SessionTranscript, StoreError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut offset = 0u64;
    let mut transcript: Option<SessionTranscript> = None;
    for line in text.split_inclusive('\n') {
        let corrupt = |reason: String| StoreError::Integrity {
            path: path.to_path_buf(),
            offset,
            reason,
        };
        if !line.ends_with('\n') {
            return Err(corrupt("truncated record".into()));
        }
        let body = line.trim_end();
        match transcript.as_mut() {
            None => {
                let header: WalHeader = serde_json::from_str(body).map_err(|e| corrupt(e.to_string()))?;
                if header.v != SCHEMA_VERSION {
                    return Err(StoreError::UnsupportedVersion(header.v));
                }
                transcript = Some(SessionTranscript::new(
                    header.session_id,
                    header.script_id,
                    header.agent_profile,
                    header.date,
                ));
            }
            Some(t) => {
                let event: TranscriptEvent = serde_json::from_str(body).map_err(|e| corrupt(e.to_string()))?;
                t.append(event).map_err(|e| corrupt(e.to_string()))?;
            }
        }
        offset += line.len() as u64;
    }
    transcript.ok_or_else(|| StoreError::Integrity {
        path: path.to_path_buf(),
        offset: 0,
        reason: "empty session log".into(),
    })
}

/// Single writer for one live session.
#[derive(Debug)]
pub struct SessionWriter {
    store: TranscriptStore,
    transcript: SessionTranscript,
    file: Option<File>,
}

impl SessionWriter {
    pub fn transcript(&self) -> &SessionTranscript {
        &self.transcript
    }

    pub fn session_id(&self) -> &str {
        &self.transcript.session_id
    }

    fn sync(&mut self) -> Result<(), StoreError> {
        let path = self.store.wal_path(&self.transcript.session_id);
        if let Some(file) = self.file.as_mut() {
            match self.store.durability {
                Durability::Sync => file.sync_data().map_err(io_err(&path))?,
                Durability::Flush => file.flush().map_err(io_err(&path))?,
            }
        }
        Ok(())
    }

    /// Durably append one event. The seq must follow the last one.
    pub fn append(&mut self, event: TranscriptEvent) -> Result<(), StoreError> {
        if self.file.is_none() {
            return Err(StoreError::Finalized(self.transcript.session_id.clone()));
        }
        let expected = self.transcript.next_seq();
        if event.seq != expected {
            return Err(OrderingError::Seq {
                expected,
                got: event.seq,
            }
            .into());
        }
        let mut line = serde_json::to_string(&event).expect("event serializes");
        line.push('\n');
        let path = self.store.wal_path(&self.transcript.session_id);
        self.file
            .as_mut()
            .expect("checked above")
            .write_all(line.as_bytes())
            .map_err(io_err(&path))?;
        self.sync()?;
        self.transcript.append(event)?;
        Ok(())
    }

    /// Close the log and write the final document.
    pub fn finalize(&mut self, status: SessionStatus, ended_at: u64) -> Result<PathBuf, StoreError> {
        if self.file.is_none() {
            return Err(StoreError::Finalized(self.transcript.session_id.clone()));
        }
        self.transcript.status = status;
        self.transcript.ended_at = Some(ended_at);
        let path = self.store.save(&self.transcript)?;
        self.file = None;
        Ok(path)
    }
}

use std::fs::{self, File, OpenOptions};
use std::io::{self, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::events::{EventBody, LinkEvent};
use super::state::{StationSnapshot, StationState};
use super::StationConfig;

#[derive(Debug, Error)]
pub enum JournalError {
    #[error("journal io: {0}")]
    Io(#[from] io::Error),
    #[error("journal corrupt at line {line}: {reason}")]
    JournalCorrupt { line: usize, reason: String },
}

/// Append-only newline-delimited JSON event log.
#[derive(Debug)]
pub struct Journal {
    path: PathBuf,
    file: File,
}

impl Journal {
    /// Creates `<dir>/sessions/<session_id>.jsonl`, truncating any earlier run.
    pub fn create(dir: &Path, session_id: &str) -> io::Result<Self> {
        let sessions = dir.join("sessions");
        fs::create_dir_all(&sessions)?;
        Self::create_at(&sessions.join(format!("{session_id}.jsonl")))
    }

    pub fn create_at(path: &Path) -> io::Result<Self> {
        let file = OpenOptions::new()
            .create(true)
            .write(true)
            .truncate(true)
            .open(path)?;
        Ok(Journal {
            path: path.to_path_buf(),
            file,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Writes one event. With `durable` the data is synced to disk before
    /// returning.
    pub fn append(&mut self, e: &LinkEvent, durable: bool) -> io::Result<()> {
        let mut line = serde_json::to_string(e).map_err(io::Error::other)?;
        line.push('\n');
        self.file.write_all(line.as_bytes())?;
        if durable {
            self.file.sync_data()?;
        }
        Ok(())
    }

    pub fn sync(&mut self) -> io::Result<()> {
        self.file.sync_data()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Replay {
    pub snapshot: StationSnapshot,
    pub events: usize,
    /// A partial final record was dropped.
    pub truncated_tail: bool,
}

/// Parses a journal. A final line without its newline that fails to parse is
/// a torn write and is dropped; any other bad line is fatal.
pub fn read_events(path: &Path) -> Result<(Vec<LinkEvent>, bool), JournalError> {
    let mut text = String::new();
    BufReader::new(File::open(path)?).read_to_string(&mut text)?;
    let complete = text.is_empty() || text.ends_with('\n');
    let lines: Vec<&str> = text.lines().collect();
    let mut events = Vec::with_capacity(lines.len());
    let mut truncated = false;
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<LinkEvent>(line) {
            Ok(e) => events.push(e),
            Err(err) => {
                if i + 1 == lines.len() && !complete {
                    truncated = true;
                } else {
                    return Err(JournalError::JournalCorrupt {
                        line: i + 1,
                        reason: err.to_string(),
                    });
                }
            }
        }
    }
    Ok((events, truncated))
}

/// Folds a journal into the snapshot the live station ended with.
pub fn journal_replay(path: &Path) -> Result<Replay, JournalError> {
    let (events, truncated_tail) = read_events(path)?;
    let mut state = match events.first().map(|e| &e.body) {
        Some(EventBody::Session(s)) => StationState::new(s.clone()),
        _ => StationState::new(StationConfig::default().session_body("replay")),
    };
    for e in &events {
        state.apply(e);
    }
    if truncated_tail {
        log::warn!("{}: dropped truncated final record", path.display());
    }
    Ok(Replay {
        snapshot: state.snapshot(),
        events: events.len(),
        truncated_tail,
    })
}

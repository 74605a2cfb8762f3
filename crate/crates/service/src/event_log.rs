//! Append-only JSONL log of every mutation the service applied.
//!
//! Each line is one [`EventLogEntry`]. Sequence numbers start at 0 and are
//! dense; `version` is the engine version right after the mutation. Lines
//! are flushed to disk before the mutation is acknowledged.

use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use privacycube_core::{CollectionEvent, DeviceId, DevicePrivacyProfile, EngineError, EngineState, Registry};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Mutation {
    Register {
        at_ms: u64,
        profile: DevicePrivacyProfile,
    },
    Unregister {
        at_ms: u64,
        device_id: DeviceId,
    },
    Event {
        event: CollectionEvent,
    },
    Focus {
        at_ms: u64,
        device_id: Option<DeviceId>,
    },
}

impl Mutation {
    pub fn apply(&self, engine: &mut EngineState) -> Result<(), EngineError> {
        match self {
            Mutation::Register { at_ms, profile } => engine.register(profile.clone(), *at_ms).map(drop),
            Mutation::Unregister { at_ms, device_id } => engine.unregister(device_id.as_str(), *at_ms).map(drop),
            Mutation::Event { event } => engine.apply_event(event),
            Mutation::Focus { at_ms, device_id } => {
                engine.set_focus(device_id.as_ref().map(DeviceId::as_str), *at_ms)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventLogEntry {
    pub seq: u64,
    pub wall_ms: u64,
    pub version: u64,
    pub mutation: Mutation,
}

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("cannot read event log {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("corrupt event log entry on line {line}: {message}")]
    CorruptEntry { line: usize, message: String },
    #[error("sequence gap on line {line}: expected {expected}, found {found}")]
    SequenceGap { line: usize, expected: u64, found: u64 },
    #[error("entry on line {line} was rejected on replay: {source}")]
    Rejected {
        line: usize,
        #[source]
        source: EngineError,
    },
    #[error("entry on line {line} records version {recorded} but replay reached {replayed}")]
    VersionMismatch { line: usize, recorded: u64, replayed: u64 },
}

/// Reads and sequence-checks every entry. A missing file reads as empty.
pub fn read_event_log(path: &Path) -> Result<Vec<EventLogEntry>, ReplayError> {
    let io_err = |source| ReplayError::Io {
        path: path.to_owned(),
        source,
    };
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(io_err(e)),
    };
    let mut entries = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(io_err)?;
        let entry: EventLogEntry = serde_json::from_str(&line).map_err(|e| ReplayError::CorruptEntry {
            line: line_no,
            message: e.to_string(),
        })?;
        let expected = entries.len() as u64;
        if entry.seq != expected {
            return Err(ReplayError::SequenceGap {
                line: line_no,
                expected,
                found: entry.seq,
            });
        }
        entries.push(entry);
    }
    Ok(entries)
}

/// Re-applies logged mutations, in order, on top of `profiles`.
pub fn replay_entries(entries: &[EventLogEntry], profiles: Registry) -> Result<EngineState, ReplayError> {
    let mut engine = EngineState::new(profiles);
    for (i, entry) in entries.iter().enumerate() {
        let line = i + 1;
        entry
            .mutation
            .apply(&mut engine)
            .map_err(|source| ReplayError::Rejected { line, source })?;
        if engine.version() != entry.version {
            return Err(ReplayError::VersionMismatch {
                line,
                recorded: entry.version,
                replayed: engine.version(),
            });
        }
    }
    Ok(engine)
}

pub fn replay_event_log(path: &Path, profiles: Registry) -> Result<EngineState, ReplayError> {
    replay_entries(&read_event_log(path)?, profiles)
}

/// Writer half of the log.
#[derive(Debug)]
pub struct EventLog {
    path: PathBuf,
    file: File,
    next_seq: u64,
}

impl EventLog {
    /// Opens `path` for appending; `next_seq` continues after `existing` entries.
    pub fn open(path: &Path, existing: u64) -> io::Result<EventLog> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(EventLog {
            path: path.to_owned(),
            file,
            next_seq: existing,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn next_seq(&self) -> u64 {
        self.next_seq
    }

    /// Writes one entry and syncs it to disk.
    pub fn append(&mut self, wall_ms: u64, version: u64, mutation: Mutation) -> io::Result<EventLogEntry> {
        let entry = EventLogEntry {
            seq: self.next_seq,
            wall_ms,
            version,
            mutation,
        };
        let mut line = serde_json::to_vec(&entry).map_err(io::Error::other)?;
        line.push(b'\n');
        self.file.write_all(&line)?;
        self.file.sync_data()?;
        self.next_seq += 1;
        Ok(entry)
    }
}

/// Fails early when the log's directory does not exist.
pub(crate) fn check_log_path(path: &Path) -> io::Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => {
            let meta = fs::metadata(dir)?;
            if meta.is_dir() {
                Ok(())
            } else {
                Err(io::Error::new(io::ErrorKind::NotADirectory, format!("{} is not a directory", dir.display())))
            }
        }
        _ => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use privacycube_core::parse_profile;

    fn lock_profile() -> DevicePrivacyProfile {
        parse_profile(
            br#"{"device_id":"lock","display_name":"Lock","device_kind":"lock",
                "declarations":[{"category":"biometric","identifiable":true}],
                "purposes":["analytics"],"access":["device_manufacturer"],
                "storage_countries":["US"],"retention":"P30D"}"#,
        )
        .unwrap()
    }

    fn id(s: &str) -> DeviceId {
        DeviceId::new(s).unwrap()
    }

    fn sample(dir: &Path) -> PathBuf {
        let path = dir.join("events.jsonl");
        let mut log = EventLog::open(&path, 0).unwrap();
        log.append(1, 1, Mutation::Event { event: CollectionEvent::start(id("lock"), 10) }).unwrap();
        log.append(2, 2, Mutation::Focus { at_ms: 20, device_id: Some(id("lock")) }).unwrap();
        log.append(3, 3, Mutation::Event { event: CollectionEvent::stop(id("lock"), 30) }).unwrap();
        log.append(4, 4, Mutation::Focus { at_ms: 40, device_id: None }).unwrap();
        path
    }

    fn registry() -> Registry {
        let mut r = Registry::new();
        r.register(lock_profile()).unwrap();
        r
    }

    #[test]
    fn missing_or_empty_log_is_initial_state() {
        let dir = tempfile::tempdir().unwrap();
        let missing = replay_event_log(&dir.path().join("none.jsonl"), registry()).unwrap();
        assert_eq!(missing.version(), 0);
        let empty = dir.path().join("empty.jsonl");
        fs::write(&empty, "").unwrap();
        let state = replay_event_log(&empty, registry()).unwrap();
        assert_eq!(state.cube_state(), EngineState::new(registry()).cube_state());
    }

    #[test]
    fn replay_matches_direct_application() {
        let dir = tempfile::tempdir().unwrap();
        let path = sample(dir.path());
        let replayed = replay_event_log(&path, registry()).unwrap();

        let mut direct = EngineState::new(registry());
        direct.apply_event(&CollectionEvent::start(id("lock"), 10)).unwrap();
        direct.set_focus(Some("lock"), 20).unwrap();
        direct.apply_event(&CollectionEvent::stop(id("lock"), 30)).unwrap();
        direct.set_focus(None, 40).unwrap();
        assert_eq!(replayed.cube_state().to_json(), direct.cube_state().to_json());
    }

    #[test]
    fn truncated_line_is_corrupt_entry() {
        let dir = tempfile::tempdir().unwrap();
        let path = sample(dir.path());
        let text = fs::read_to_string(&path).unwrap();
        let mut lines: Vec<&str> = text.lines().collect();
        let cut = &lines[2][..lines[2].len() / 2];
        lines[2] = cut;
        fs::write(&path, lines.join("\n")).unwrap();
        match replay_event_log(&path, registry()) {
            Err(ReplayError::CorruptEntry { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected CorruptEntry, got {other:?}"),
        }
    }

    #[test]
    fn missing_line_is_sequence_gap() {
        let dir = tempfile::tempdir().unwrap();
        let path = sample(dir.path());
        let text = fs::read_to_string(&path).unwrap();
        let kept: Vec<&str> = text.lines().enumerate().filter(|(i, _)| *i != 1).map(|(_, l)| l).collect();
        fs::write(&path, kept.join("\n")).unwrap();
        match replay_event_log(&path, registry()) {
            Err(ReplayError::SequenceGap { line, expected, found }) => {
                assert_eq!((line, expected, found), (2, 1, 2));
            }
            other => panic!("expected SequenceGap, got {other:?}"),
        }
    }

    #[test]
    fn register_round_trips_through_the_log() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("events.jsonl");
        let mut log = EventLog::open(&path, 0).unwrap();
        log.append(0, 1, Mutation::Register { at_ms: 5, profile: lock_profile() }).unwrap();
        log.append(0, 2, Mutation::Unregister { at_ms: 6, device_id: id("lock") }).unwrap();
        let entries = read_event_log(&path).unwrap();
        assert_eq!(entries[0].mutation, Mutation::Register { at_ms: 5, profile: lock_profile() });
        let state = replay_entries(&entries, Registry::new()).unwrap();
        assert_eq!(state.version(), 2);
        assert!(state.registry().is_empty());
        // the registry remembers the retired index
        assert_eq!(state.registry().next_index(), 1);
    }

    #[test]
    fn rejected_and_mismatched_entries() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("events.jsonl");
        let mut log = EventLog::open(&path, 0).unwrap();
        log.append(0, 1, Mutation::Event { event: CollectionEvent::stop(id("lock"), 1) }).unwrap();
        assert!(matches!(
            replay_event_log(&path, registry()),
            Err(ReplayError::Rejected { line: 1, source: EngineError::StopWithoutSession(_) })
        ));

        let path = dir.path().join("versions.jsonl");
        let mut log = EventLog::open(&path, 0).unwrap();
        log.append(0, 7, Mutation::Focus { at_ms: 1, device_id: None }).unwrap();
        assert!(matches!(
            replay_event_log(&path, registry()),
            Err(ReplayError::VersionMismatch { line: 1, recorded: 7, replayed: 1 })
        ));
    }

    #[test]
    fn reopening_continues_sequence() {
        let dir = tempfile::tempdir().unwrap();
        let path = sample(dir.path());
        let existing = read_event_log(&path).unwrap().len() as u64;
        let mut log = EventLog::open(&path, existing).unwrap();
        let entry = log.append(5, 5, Mutation::Focus { at_ms: 50, device_id: None }).unwrap();
        assert_eq!(entry.seq, 4);
        assert_eq!(read_event_log(&path).unwrap().len(), 5);
    }
}

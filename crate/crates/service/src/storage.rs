//! Durable storage: the append-only `events.log`, sealed evidence blobs and
//! state snapshots.
//!
//! Every log line is the canonical serialization of one [`EventRecord`].
//! The record's digest covers the record without the digest field, and a
//! line must be byte-identical to its own canonical form, so any edit to
//! the file is caught when the log is opened.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use hazreg_core::domain::ModelCard;
use hazreg_core::engine::AuditEvent;
use hazreg_core::formats::{serialize_canonical, Digest};
use hazreg_core::hex::HexStatement;
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const EVENT_LOG: &str = "events.log";
pub const BLOB_DIR: &str = "blobs";
pub const SNAPSHOT_DIR: &str = "snapshots";

#[derive(Debug, thiserror::Error)]
pub enum StorageError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("storage corruption at {EVENT_LOG} line {line}: {reason}")]
    Corruption { line: usize, reason: String },
    #[error("snapshot {seq} does not match the replayed state")]
    SnapshotMismatch { seq: u64 },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StorageError + '_ {
    move |source| StorageError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Everything that changes registry state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum RegistryEvent {
    ModelCardRegistered {
        vendor_id: String,
        card: ModelCard,
    },
    Case {
        audit_event: AuditEvent,
    },
    HexStatementRecorded {
        recorded_by: String,
        statement: HexStatement,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub global_seq: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub case_id: Option<String>,
    pub recorded_at: DateTime<Utc>,
    pub event: RegistryEvent,
    pub canonical_digest: Digest,
}

fn unsealed_bytes(value: &Value) -> Vec<u8> {
    let mut body = value.clone();
    if let Value::Object(map) = &mut body {
        map.remove("canonical_digest");
    }
    serialize_canonical(&body)
}

impl EventRecord {
    fn seal(
        global_seq: u64,
        case_id: Option<String>,
        recorded_at: DateTime<Utc>,
        event: RegistryEvent,
    ) -> Self {
        let mut record = Self {
            global_seq,
            case_id,
            recorded_at,
            event,
            canonical_digest: Digest::of(b""),
        };
        let value = serde_json::to_value(&record).expect("records serialize");
        record.canonical_digest = Digest::of(&unsealed_bytes(&value));
        record
    }

    pub fn to_line(&self) -> Vec<u8> {
        let mut line = serialize_canonical(&serde_json::to_value(self).expect("records serialize"));
        line.push(b'\n');
        line
    }

    /// Verify and decode one log line (without its newline).
    pub fn from_line(line: &[u8], number: usize) -> Result<Self, StorageError> {
        let corrupt = |reason: String| StorageError::Corruption {
            line: number,
            reason,
        };
        let value: Value =
            serde_json::from_slice(line).map_err(|e| corrupt(format!("not JSON: {e}")))?;
        if serialize_canonical(&value) != line {
            return Err(corrupt("line is not in canonical form".into()));
        }
        let record: EventRecord = serde_json::from_value(value.clone())
            .map_err(|e| corrupt(format!("not an event record: {e}")))?;
        if Digest::of(&unsealed_bytes(&value)) != record.canonical_digest {
            return Err(corrupt("digest mismatch".into()));
        }
        Ok(record)
    }
}

/// Append-only event log.
#[derive(Debug)]
pub struct EventLog {
    path: PathBuf,
    file: File,
    last_seq: u64,
}

impl EventLog {
    /// Open (creating if needed) and verify the whole log.
    pub fn open(data_dir: &Path) -> Result<(Self, Vec<EventRecord>), StorageError> {
        std::fs::create_dir_all(data_dir).map_err(io_err(data_dir))?;
        let path = data_dir.join(EVENT_LOG);
        let file = OpenOptions::new()
            .create(true)
            .read(true)
            .append(true)
            .open(&path)
            .map_err(io_err(&path))?;
        let mut records = Vec::new();
        let mut reader = BufReader::new(&file);
        let mut line = Vec::new();
        let mut number = 0;
        loop {
            line.clear();
            let read = reader.read_until(b'\n', &mut line).map_err(io_err(&path))?;
            if read == 0 {
                break;
            }
            number += 1;
            if line.pop() != Some(b'\n') {
                return Err(StorageError::Corruption {
                    line: number,
                    reason: "truncated final line".into(),
                });
            }
            let record = EventRecord::from_line(&line, number)?;
            if record.global_seq != number as u64 {
                return Err(StorageError::Corruption {
                    line: number,
                    reason: format!("expected global_seq {number}, found {}", record.global_seq),
                });
            }
            records.push(record);
        }
        let last_seq = records.len() as u64;
        Ok((
            Self {
                path,
                file,
                last_seq,
            },
            records,
        ))
    }

    pub fn last_seq(&self) -> u64 {
        self.last_seq
    }

    /// Append and flush to stable storage before returning.
    pub fn append(
        &mut self,
        case_id: Option<String>,
        event: RegistryEvent,
        recorded_at: DateTime<Utc>,
    ) -> Result<EventRecord, StorageError> {
        let record = EventRecord::seal(self.last_seq + 1, case_id, recorded_at, event);
        self.file
            .write_all(&record.to_line())
            .map_err(io_err(&self.path))?;
        self.file.sync_data().map_err(io_err(&self.path))?;
        self.last_seq = record.global_seq;
        Ok(record)
    }
}

fn write_atomically(path: &Path, bytes: &[u8]) -> Result<(), StorageError> {
    let tmp = path.with_extension("tmp");
    let mut file = File::create(&tmp).map_err(io_err(&tmp))?;
    file.write_all(bytes).map_err(io_err(&tmp))?;
    file.sync_data().map_err(io_err(&tmp))?;
    std::fs::rename(&tmp, path).map_err(io_err(path))
}

/// Content-addressed store for sealed evidence payloads.
#[derive(Debug, Clone)]
pub struct BlobStore {
    dir: PathBuf,
}

impl BlobStore {
    pub fn open(data_dir: &Path) -> Result<Self, StorageError> {
        let dir = data_dir.join(BLOB_DIR);
        std::fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        Ok(Self { dir })
    }

    fn path_for(&self, digest: &Digest) -> PathBuf {
        self.dir
            .join(format!("{}-{}", digest.algorithm().as_str(), digest.hex()))
    }

    pub fn put(&self, bytes: &[u8]) -> Result<Digest, StorageError> {
        let digest = Digest::of(bytes);
        let path = self.path_for(&digest);
        if !path.exists() {
            write_atomically(&path, bytes)?;
        }
        Ok(digest)
    }

    pub fn get(&self, digest: &Digest) -> Result<Option<Vec<u8>>, StorageError> {
        let path = self.path_for(digest);
        match std::fs::read(&path) {
            Ok(bytes) => Ok(Some(bytes)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(source) => Err(StorageError::Io { path, source }),
        }
    }
}

/// Canonical state dumps keyed by the last applied `global_seq`.
#[derive(Debug, Clone)]
pub struct SnapshotStore {
    dir: PathBuf,
}

impl SnapshotStore {
    pub fn open(data_dir: &Path) -> Result<Self, StorageError> {
        let dir = data_dir.join(SNAPSHOT_DIR);
        std::fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        Ok(Self { dir })
    }

    pub fn write(&self, seq: u64, canonical: &[u8]) -> Result<PathBuf, StorageError> {
        let path = self.dir.join(format!("{seq}.json"));
        write_atomically(&path, canonical)?;
        Ok(path)
    }

    pub fn read(&self, seq: u64) -> Result<Option<Vec<u8>>, StorageError> {
        let path = self.dir.join(format!("{seq}.json"));
        match std::fs::read(&path) {
            Ok(bytes) => Ok(Some(bytes)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(source) => Err(StorageError::Io { path, source }),
        }
    }

    /// Sequence numbers of every snapshot on disk, ascending.
    pub fn list(&self) -> Result<Vec<u64>, StorageError> {
        let mut seqs: Vec<u64> = std::fs::read_dir(&self.dir)
            .map_err(io_err(&self.dir))?
            .filter_map(|entry| entry.ok())
            .filter_map(|entry| {
                entry
                    .file_name()
                    .to_str()?
                    .strip_suffix(".json")?
                    .parse()
                    .ok()
            })
            .collect();
        seqs.sort_unstable();
        Ok(seqs)
    }
}

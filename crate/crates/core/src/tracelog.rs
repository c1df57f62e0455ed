//! `CHANGES.crs.jsonl`: the dataset's append-only, hash-chained change log.
//!
//! Each line is the canonical JSON of a [`TraceRecord`] plus a `chain` field:
//! `chain_k = sha256(chain_{k-1} || canonical record bytes)`, with an all-zero
//! genesis value. Any edit, deletion or reordering of a line breaks the chain
//! from that line onward. Dropping trailing lines leaves a valid prefix, so
//! truncation is only detectable against a published head hash (see
//! [`validate_log_anchored`]).

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::canonical;

pub const TRACE_LOG_FILE: &str = "CHANGES.crs.jsonl";
pub const GENESIS: [u8; 32] = [0u8; 32];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChangeKind {
    PointAdded,
    PointRemoved,
    DataModified,
    AnnotationModified,
    VersionReleased,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceRecord {
    pub recorded_at: DateTime<Utc>,
    pub change_kind: ChangeKind,
    pub affected_points: Vec<String>,
    pub description: String,
    pub actor: String,
}

impl TraceRecord {
    fn check(&self) -> Result<(), String> {
        if self.affected_points.is_empty() && self.change_kind != ChangeKind::VersionReleased {
            return Err("affected_points may only be empty for version-released records".into());
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = self.affected_points.iter().find(|p| !seen.insert(p.as_str())) {
            return Err(format!("affected point {dup:?} listed twice"));
        }
        Ok(())
    }

    fn canonical_bytes(&self) -> Vec<u8> {
        canonical::to_canonical_bytes(self).expect("record serialization is infallible")
    }
}

/// Chain value following `prev` for `record`.
pub fn chain_hash(prev: &[u8; 32], record: &TraceRecord) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(prev);
    h.update(record.canonical_bytes());
    h.finalize().into()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainedRecord {
    pub record: TraceRecord,
    pub chain: [u8; 32],
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TraceLog {
    pub records: Vec<ChainedRecord>,
    pub source_path: String,
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("record at {new} is earlier than the last record at {last}")]
    OutOfOrder { new: DateTime<Utc>, last: DateTime<Utc> },
    #[error("invalid record: {0}")]
    InvalidRecord(String),
    #[error("existing log is invalid: {0}")]
    CorruptLog(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl TraceLog {
    pub fn new(source_path: impl Into<String>) -> Self {
        Self {
            records: Vec::new(),
            source_path: source_path.into(),
        }
    }

    /// Chain value of the last record; the genesis value when empty.
    pub fn head(&self) -> [u8; 32] {
        self.records.last().map(|r| r.chain).unwrap_or(GENESIS)
    }

    pub fn append(&mut self, record: TraceRecord) -> Result<&ChainedRecord, TraceError> {
        record.check().map_err(TraceError::InvalidRecord)?;
        if let Some(last) = self.records.last() {
            if record.recorded_at < last.record.recorded_at {
                return Err(TraceError::OutOfOrder {
                    new: record.recorded_at,
                    last: last.record.recorded_at,
                });
            }
        }
        let chain = chain_hash(&self.head(), &record);
        self.records.push(ChainedRecord { record, chain });
        Ok(self.records.last().expect("just pushed"))
    }

    /// One JSON line per record, newline-terminated.
    pub fn to_jsonl(&self) -> String {
        self.records.iter().map(|r| format!("{}\n", line_for(r))).collect()
    }
}

fn line_for(r: &ChainedRecord) -> String {
    let mut value = serde_json::to_value(&r.record).expect("record serialization is infallible");
    value
        .as_object_mut()
        .expect("records serialize as objects")
        .insert("chain".into(), serde_json::Value::String(hex::encode(r.chain)));
    serde_json::to_string(&value).expect("record serialization is infallible")
}

/// Splits a log line into its record and claimed chain value.
fn split_line(raw: &str) -> Result<(TraceRecord, String), String> {
    let mut value: serde_json::Value = serde_json::from_str(raw).map_err(|e| e.to_string())?;
    let obj = value.as_object_mut().ok_or("line is not a JSON object")?;
    let chain = match obj.remove("chain") {
        Some(serde_json::Value::String(c)) => c,
        _ => return Err("missing chain field".into()),
    };
    let record = serde_json::from_value(value).map_err(|e| e.to_string())?;
    Ok((record, chain))
}

/// Appends one record to the log file at `path`, creating it if needed.
/// The existing contents must validate.
pub fn append_record(path: &Path, record: TraceRecord) -> Result<[u8; 32], TraceError> {
    let mut log = match std::fs::read(path) {
        Ok(bytes) => parse_log(&bytes, path).map_err(TraceError::CorruptLog)?,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => TraceLog::new(path.display().to_string()),
        Err(e) => return Err(e.into()),
    };
    let line = line_for(log.append(record)?);
    let mut f = std::fs::OpenOptions::new().create(true).append(true).open(path)?;
    writeln!(f, "{line}")?;
    Ok(log.head())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LogValidation {
    Valid { records: usize, head: [u8; 32] },
    Invalid(String),
}

impl LogValidation {
    pub fn is_valid(&self) -> bool {
        matches!(self, LogValidation::Valid { .. })
    }
}

impl fmt::Display for LogValidation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LogValidation::Valid { records, .. } => write!(f, "valid ({records} records)"),
            LogValidation::Invalid(reason) => write!(f, "invalid({reason})"),
        }
    }
}

/// Parses and fully verifies a log; errors name the 1-based line.
pub fn parse_log(bytes: &[u8], source: &Path) -> Result<TraceLog, String> {
    let text = std::str::from_utf8(bytes).map_err(|e| format!("not UTF-8: {e}"))?;
    let body = text.strip_suffix('\n').unwrap_or(text);
    let mut log = TraceLog::new(source.display().to_string());
    if body.is_empty() {
        return Ok(log);
    }
    for (idx, raw) in body.split('\n').enumerate() {
        let line_no = idx + 1;
        let (record, chain) = split_line(raw).map_err(|e| format!("parse error at line {line_no}: {e}"))?;
        record
            .check()
            .map_err(|e| format!("invalid record at line {line_no}: {e}"))?;
        if let Some(prev) = log.records.last() {
            if record.recorded_at < prev.record.recorded_at {
                return Err(format!("dates not monotonic at line {line_no}"));
            }
        }
        let expected = chain_hash(&log.head(), &record);
        if hex::encode(expected) != chain {
            return Err(format!("chain hash mismatch at line {line_no}"));
        }
        log.records.push(ChainedRecord {
            record,
            chain: expected,
        });
    }
    Ok(log)
}

pub fn validate_log_bytes(bytes: &[u8]) -> LogValidation {
    match parse_log(bytes, Path::new("")) {
        Ok(log) => LogValidation::Valid {
            records: log.records.len(),
            head: log.head(),
        },
        Err(reason) => LogValidation::Invalid(reason),
    }
}

/// Valid iff the file parses, dates never decrease, and every chain value verifies.
pub fn validate_log(path: &Path) -> LogValidation {
    match std::fs::read(path) {
        Ok(bytes) => validate_log_bytes(&bytes),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => LogValidation::Invalid("absent".into()),
        Err(e) => LogValidation::Invalid(format!("unreadable: {e}")),
    }
}

/// [`validate_log_bytes`] plus a check that the last chain value equals `expected_head`.
pub fn validate_log_anchored(bytes: &[u8], expected_head: &[u8; 32]) -> LogValidation {
    match validate_log_bytes(bytes) {
        LogValidation::Valid { head, .. } if head != *expected_head => {
            LogValidation::Invalid("head hash mismatch: log truncated or rewritten".into())
        }
        other => other,
    }
}

/// Reads a log from disk without verifying it.
pub fn read_log(path: &Path) -> Result<TraceLog, TraceError> {
    let bytes = std::fs::read(path)?;
    parse_log(&bytes, path).map_err(TraceError::CorruptLog)
}

pub fn default_log_path(root: &Path) -> PathBuf {
    root.join(TRACE_LOG_FILE)
}

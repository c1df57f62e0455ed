//! `FLAGS.crs.jsonl`: data points the dataset explicitly flags as inconclusive.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const FLAGS_FILE: &str = "FLAGS.crs.jsonl";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlagRecord {
    pub asset_id: String,
    pub reason: String,
    pub flagged_at: DateTime<Utc>,
}

#[derive(Debug, Error)]
pub enum FlagError {
    #[error("cannot read flag file: {0}")]
    Io(#[from] std::io::Error),
    #[error("flag file line {line}: {source}")]
    Parse {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
}

/// Flag records keyed by asset id. `checked` is false when no file was found.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FlagFile {
    pub records: BTreeMap<String, FlagRecord>,
    pub checked: bool,
}

impl FlagFile {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_records(records: impl IntoIterator<Item = FlagRecord>) -> Self {
        Self {
            records: records.into_iter().map(|r| (r.asset_id.clone(), r)).collect(),
            checked: true,
        }
    }

    /// Reads the flag file; a missing file yields an empty, unchecked set.
    pub fn load(path: &Path) -> Result<Self, FlagError> {
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Self::empty()),
            Err(e) => return Err(e.into()),
        };
        let mut records = BTreeMap::new();
        for (idx, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let rec: FlagRecord =
                serde_json::from_str(line).map_err(|source| FlagError::Parse { line: idx + 1, source })?;
            records.insert(rec.asset_id.clone(), rec);
        }
        Ok(Self { records, checked: true })
    }

    pub fn contains(&self, asset_id: &str) -> bool {
        self.records.contains_key(asset_id)
    }
}

/// Appends one record as a canonical JSON line.
pub fn append_flag(path: &Path, record: &FlagRecord) -> Result<(), FlagError> {
    let line = crate::canonical::to_canonical_string(record).map_err(|source| FlagError::Parse { line: 0, source })?;
    let mut f = std::fs::OpenOptions::new().create(true).append(true).open(path)?;
    writeln!(f, "{line}")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_file_is_unchecked() {
        let dir = tempfile::tempdir().unwrap();
        let flags = FlagFile::load(&dir.path().join(FLAGS_FILE)).unwrap();
        assert!(!flags.checked);
        assert!(!flags.contains("x"));
    }

    #[test]
    fn append_then_load() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(FLAGS_FILE);
        let rec = FlagRecord {
            asset_id: "img/0001.png".into(),
            reason: "license unspecified".into(),
            flagged_at: "2024-02-02T00:00:00Z".parse().unwrap(),
        };
        append_flag(&path, &rec).unwrap();
        let flags = FlagFile::load(&path).unwrap();
        assert!(flags.checked && flags.contains("img/0001.png"));
        assert_eq!(flags.records["img/0001.png"], rec);
    }

    #[test]
    fn bad_line_reports_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(FLAGS_FILE);
        std::fs::write(
            &path,
            "{\"asset_id\":\"a\",\"reason\":\"r\",\"flagged_at\":\"2024-01-01T00:00:00Z\"}\n{oops\n",
        )
        .unwrap();
        assert!(matches!(FlagFile::load(&path), Err(FlagError::Parse { line: 2, .. })));
    }
}

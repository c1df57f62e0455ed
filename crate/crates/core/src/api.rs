//! Small, host-agnostic entry points for pipeline integrations and language
//! bindings. Everything here delegates to the rest of the crate; the CLI uses
//! the same functions so both front ends agree byte for byte.

use std::path::{Path, PathBuf};

use chrono::Utc;
use thiserror::Error;

use crate::assess::{rate_snapshot, AssessError, RateOptions};
use crate::criteria::{assess_datapoint, ContractError, CriterionId, DataPointAssessment, DatasetPolicy, PolicyError};
use crate::provenance::{AssetRef, DatasetEntry, RetentionParseError, RetentionPeriod};
use crate::report::ReportDocument;

#[derive(Debug, Error)]
pub enum ApiError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Retention(#[from] RetentionParseError),
    #[error("a pending entry needs both a dataset source and a retention period")]
    IncompleteEntry,
    #[error(transparent)]
    Assess(#[from] AssessError),
    #[error(transparent)]
    Contract(#[from] ContractError),
}

/// Parses a pending dataset entry stamped with the current time.
pub fn pending_entry(source: &str, retention: &str) -> Result<DatasetEntry, ApiError> {
    if source.trim().is_empty() {
        return Err(ApiError::IncompleteEntry);
    }
    let retention: RetentionPeriod = retention.trim().parse()?;
    Ok(DatasetEntry::new(source.trim(), retention, Utc::now()))
}

/// Admission check for the file at `path` under the policy at `policy_path`.
///
/// `pending_source` and `retention` must be given together or not at all.
pub fn check_point(
    path: &Path,
    policy_path: &Path,
    pending_source: Option<&str>,
    retention: Option<&str>,
) -> Result<DataPointAssessment, ApiError> {
    let policy = DatasetPolicy::load(policy_path)?;
    let entry = match (pending_source, retention) {
        (Some(s), Some(r)) => Some(pending_entry(s, r)?),
        (None, None) => None,
        _ => return Err(ApiError::IncompleteEntry),
    };
    check_point_with(path, &policy, entry.as_ref())
}

pub fn check_point_with(
    path: &Path,
    policy: &DatasetPolicy,
    entry: Option<&DatasetEntry>,
) -> Result<DataPointAssessment, ApiError> {
    let io = |source| ApiError::Io {
        path: path.to_path_buf(),
        source,
    };
    let asset = AssetRef::from_path(path).map_err(io)?;
    assess_datapoint(&asset, policy, entry).map_err(io)
}

/// Rates a local snapshot and returns the report the CLI would print.
pub fn rate(snapshot: &Path, policy_path: Option<&Path>) -> Result<ReportDocument, ApiError> {
    let options = RateOptions {
        policy: policy_path.map(DatasetPolicy::load).transpose()?,
        ..RateOptions::default()
    };
    let rating = rate_snapshot(snapshot, &options)?;
    let report = ReportDocument::from_rating(&rating, false);
    report.check()?;
    Ok(report)
}

/// Lazily keeps the paths that may be admitted, preserving order.
///
/// The dataset entry is embedded on admission, so a missing entry (C6) does
/// not reject a candidate here. Unreadable files are dropped.
pub fn compliant_only<I>(paths: I, policy: DatasetPolicy) -> CompliantOnly<I::IntoIter>
where
    I: IntoIterator,
    I::Item: AsRef<Path>,
{
    CompliantOnly {
        inner: paths.into_iter(),
        policy,
    }
}

pub struct CompliantOnly<I> {
    inner: I,
    policy: DatasetPolicy,
}

impl<I> Iterator for CompliantOnly<I>
where
    I: Iterator,
    I::Item: AsRef<Path>,
{
    type Item = I::Item;

    fn next(&mut self) -> Option<Self::Item> {
        self.inner.by_ref().find(|p| {
            check_point_with(p.as_ref(), &self.policy, None)
                .map(|a| a.violated.iter().all(|c| *c == CriterionId::C6))
                .unwrap_or(false)
        })
    }
}

//! Human review decisions that replace inferred dataset-level verdicts.

use std::path::Path;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::criteria::{ContractError, CriterionId, CriterionResult, CriterionStatus, Level};

pub const OVERRIDES_FILE: &str = "OVERRIDES.crs.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OverrideStatus {
    Satisfied,
    Violated,
}

impl From<OverrideStatus> for CriterionStatus {
    fn from(s: OverrideStatus) -> Self {
        match s {
            OverrideStatus::Satisfied => CriterionStatus::Satisfied,
            OverrideStatus::Violated => CriterionStatus::Violated,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReviewOverride {
    pub criterion: CriterionId,
    pub status: OverrideStatus,
    pub justification: String,
    pub reviewer: String,
    pub decided_at: DateTime<Utc>,
}

impl ReviewOverride {
    pub fn check(&self) -> Result<(), ContractError> {
        if self.criterion.level() != Level::Dataset {
            return Err(ContractError(format!(
                "{} is point-level; only C1, C4 and C5 can be overridden",
                self.criterion
            )));
        }
        if self.justification.trim().is_empty() {
            return Err(ContractError(format!(
                "override for {} has no justification",
                self.criterion
            )));
        }
        Ok(())
    }

    fn describe(&self) -> String {
        let who = if self.reviewer.trim().is_empty() {
            "unnamed reviewer"
        } else {
            self.reviewer.trim()
        };
        format!(
            "{} by {} at {}",
            CriterionStatus::from(self.status),
            who,
            self.decided_at.to_rfc3339_opts(SecondsFormat::Secs, true)
        )
    }
}

/// Record of an override applied to a result, keeping the inferred verdict.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AppliedOverride {
    pub decision: ReviewOverride,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub superseded: Vec<ReviewOverride>,
    pub inferred_status: CriterionStatus,
    pub inferred_evidence: String,
}

#[derive(Debug, Error)]
pub enum OverrideError {
    #[error("cannot access override file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("override file {path} is not a JSON array of review decisions: {message}")]
    Parse { path: String, message: String },
    #[error(transparent)]
    Contract(#[from] ContractError),
}

/// Reads an override file; a missing file means no overrides.
pub fn load_overrides(path: &Path) -> Result<Vec<ReviewOverride>, OverrideError> {
    let bytes = match std::fs::read(path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(source) => {
            return Err(OverrideError::Io {
                path: path.display().to_string(),
                source,
            })
        }
    };
    let list: Vec<ReviewOverride> = serde_json::from_slice(&bytes).map_err(|e| OverrideError::Parse {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    for o in &list {
        o.check()?;
    }
    Ok(list)
}

/// Appends a validated override, rewriting the file as a JSON array.
pub fn append_override(path: &Path, decision: ReviewOverride) -> Result<(), OverrideError> {
    decision.check()?;
    let mut list = load_overrides(path)?;
    list.push(decision);
    let mut text = serde_json::to_string_pretty(&list).expect("overrides serialize");
    text.push('\n');
    std::fs::write(path, text).map_err(|source| OverrideError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Replaces inferred dataset-level verdicts with reviewer decisions.
///
/// The latest `decided_at` per criterion wins (ties go to the later entry);
/// earlier ones are kept as superseded. Results that already carry an
/// override are re-derived from their inferred verdict, so applying the
/// same list twice gives the same output as applying it once.
pub fn apply_overrides(
    results: &[CriterionResult],
    overrides: &[ReviewOverride],
) -> Result<Vec<CriterionResult>, ContractError> {
    for o in overrides {
        o.check()?;
    }
    let mut out = Vec::with_capacity(results.len());
    for result in results {
        let mut base = result.clone();
        if let Some(prior) = base.review.take() {
            base.status = prior.inferred_status;
            base.evidence = prior.inferred_evidence;
        }
        let mut matching: Vec<&ReviewOverride> = overrides.iter().filter(|o| o.criterion == base.criterion).collect();
        let Some(winner_pos) = matching
            .iter()
            .enumerate()
            .max_by_key(|(_, o)| o.decided_at)
            .map(|(i, _)| i)
        else {
            out.push(base);
            continue;
        };
        let winner = matching.remove(winner_pos).clone();
        let superseded: Vec<ReviewOverride> = matching.into_iter().cloned().collect();

        let mut evidence = format!(
            "overridden by review: {} ({}); inferred {}: {}",
            winner.describe(),
            winner.justification.trim(),
            base.status,
            base.evidence
        );
        if !superseded.is_empty() {
            let earlier: Vec<String> = superseded.iter().map(ReviewOverride::describe).collect();
            evidence.push_str(&format!("; superseded decisions: {}", earlier.join(", ")));
        }
        let applied = AppliedOverride {
            inferred_status: base.status,
            inferred_evidence: std::mem::take(&mut base.evidence),
            decision: winner.clone(),
            superseded,
        };
        base.status = winner.status.into();
        base.evidence = evidence;
        base.review = Some(applied);
        out.push(base);
    }
    Ok(out)
}

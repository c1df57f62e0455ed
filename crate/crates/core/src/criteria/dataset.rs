//! Point-level criteria (C2, C3, C6) aggregated over a whole dataset.
//!
//! A dataset satisfies a point-level criterion only when every point does.

use std::collections::BTreeSet;

use chrono::{DateTime, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::flags::FlagFile;
use super::license::{check_license_compat, CompatValue, Compatibility, DatasetPolicy};
use super::{CriterionId, CriterionResult, CriterionStatus};
use crate::provenance::{inspect_provenance, AssetRef, ProvenanceState, ValidationStatus};

/// A data point and its stable id (path relative to the dataset's file root).
#[derive(Debug, Clone)]
pub struct DataPoint {
    pub id: String,
    pub asset: AssetRef,
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("dataset has no data points; an empty dataset cannot be rated")]
    EmptyDataset,
    #[error("cannot read data point {id}: {source}")]
    Io {
        id: String,
        #[source]
        source: std::io::Error,
    },
}

/// Everything decided about a single point.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointEvaluation {
    pub asset_id: String,
    pub provenance: ValidationStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub compatibility: Option<Compatibility>,
    /// Why C2 cannot be decided for this point; such points are C3's concern.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inconclusive_reason: Option<String>,
    /// A verified manifest carries an entry for the dataset under evaluation.
    pub has_dataset_entry: bool,
    pub retention_expired: bool,
}

impl PointEvaluation {
    pub fn is_inconclusive(&self) -> bool {
        self.inconclusive_reason.is_some()
    }

    pub fn is_incompatible(&self) -> bool {
        self.compatibility
            .as_ref()
            .is_some_and(|c| c.value == CompatValue::Incompatible)
    }
}

/// Evaluates one point. With `dataset_source` unset any dataset entry counts.
pub fn evaluate_point(
    id: &str,
    asset: &AssetRef,
    policy: &DatasetPolicy,
    dataset_source: Option<&str>,
    now: DateTime<Utc>,
) -> PointEvaluation {
    let state = inspect_provenance(asset);
    let mut eval = PointEvaluation {
        asset_id: id.to_string(),
        provenance: state.status(),
        compatibility: None,
        inconclusive_reason: None,
        has_dataset_entry: false,
        retention_expired: false,
    };
    match &state {
        ProvenanceState::Missing => eval.inconclusive_reason = Some("provenance missing".into()),
        ProvenanceState::Unparseable(e) => eval.inconclusive_reason = Some(format!("provenance unparseable ({e})")),
        ProvenanceState::Invalid { reason, .. } => {
            eval.inconclusive_reason = Some(format!("provenance invalid ({reason})"))
        }
        ProvenanceState::Valid(m) => {
            let compat = check_license_compat(&m.license, m.ai_training_consent, m.allowed_uses.as_deref(), policy);
            if compat.value == CompatValue::Inconclusive {
                eval.inconclusive_reason = Some(format!("provenance inconclusive ({})", compat.reason));
            }
            eval.compatibility = Some(compat);
            let entries: Vec<_> = match dataset_source {
                Some(src) => {
                    let wanted = crate::provenance::normalize_source(src);
                    m.dataset_entries
                        .iter()
                        .filter(|e| crate::provenance::normalize_source(&e.dataset_source) == wanted)
                        .collect()
                }
                None => m.dataset_entries.iter().collect(),
            };
            eval.has_dataset_entry = !entries.is_empty();
            eval.retention_expired = !entries.is_empty()
                && entries
                    .iter()
                    .all(|e| e.retention_period.expires_at(e.added_at).is_some_and(|t| t <= now));
        }
    }
    eval
}

#[derive(Debug, Clone)]
pub struct PointLevelOutcome {
    /// C2, C3 and C6, in that order.
    pub results: Vec<CriterionResult>,
    /// Sorted by asset id.
    pub points: Vec<PointEvaluation>,
}

/// Evaluates C2, C3 and C6 over all points. Point checks run on the current rayon pool.
pub fn assess_dataset_points(
    points: &[DataPoint],
    policy: &DatasetPolicy,
    flags: &FlagFile,
    dataset_source: &str,
) -> Result<PointLevelOutcome, EvalError> {
    if points.is_empty() {
        return Err(EvalError::EmptyDataset);
    }
    let now = Utc::now();
    let mut evals: Vec<PointEvaluation> = points
        .par_iter()
        .map(|p| {
            p.asset.read_bytes().map_err(|source| EvalError::Io {
                id: p.id.clone(),
                source,
            })?;
            Ok(evaluate_point(&p.id, &p.asset, policy, Some(dataset_source), now))
        })
        .collect::<Result<_, EvalError>>()?;
    evals.sort_by(|a, b| a.asset_id.cmp(&b.asset_id));
    Ok(PointLevelOutcome {
        results: aggregate(&evals, flags, dataset_source),
        points: evals,
    })
}

/// Builds the C2/C3/C6 results from per-point evaluations sorted by id.
pub fn aggregate(evals: &[PointEvaluation], flags: &FlagFile, dataset_source: &str) -> Vec<CriterionResult> {
    let total = evals.len();
    let ids = |pred: &dyn Fn(&PointEvaluation) -> bool| -> Vec<String> {
        evals.iter().filter(|e| pred(e)).map(|e| e.asset_id.clone()).collect()
    };
    let inconclusive = ids(&|e| e.is_inconclusive());
    let conclusive = total - inconclusive.len();

    let incompatible = ids(&|e| e.is_incompatible());
    let mut c2 = if incompatible.is_empty() {
        CriterionResult::new(
            CriterionId::C2,
            CriterionStatus::Satisfied,
            format!(
                "All {conclusive} data points with conclusive provenance comply with their license and allowed use; {} inconclusive points are left to C3.",
                inconclusive.len()
            ),
        )
    } else {
        let first = evals
            .iter()
            .find(|e| e.is_incompatible())
            .and_then(|e| e.compatibility.as_ref())
            .map(|c| c.reason.clone())
            .unwrap_or_default();
        CriterionResult::new(
            CriterionId::C2,
            CriterionStatus::Violated,
            format!(
                "{} of {total} data points are used against their license or allowed use (first: {first}).",
                incompatible.len()
            ),
        )
    };
    c2.violating_points = incompatible;
    c2.inconclusive_points = inconclusive.clone();

    let unflagged: Vec<String> = inconclusive.iter().filter(|id| !flags.contains(id)).cloned().collect();
    let flag_note = if flags.checked { "" } else { " No flag file was found." };
    let mut c3 = if unflagged.is_empty() {
        CriterionResult::new(
            CriterionId::C3,
            CriterionStatus::Satisfied,
            format!(
                "All {} data points with inconclusive provenance are flagged.{flag_note}",
                inconclusive.len()
            ),
        )
    } else {
        CriterionResult::new(
            CriterionId::C3,
            CriterionStatus::Violated,
            format!(
                "{} of {} data points with inconclusive provenance are not flagged.{flag_note}",
                unflagged.len(),
                inconclusive.len()
            ),
        )
    };
    c3.violating_points = unflagged;
    c3.inconclusive_points = inconclusive;

    let missing_entry = ids(&|e| !e.has_dataset_entry);
    let expired: BTreeSet<&str> = evals
        .iter()
        .filter(|e| e.retention_expired)
        .map(|e| e.asset_id.as_str())
        .collect();
    let expiry_note = if expired.is_empty() {
        String::new()
    } else {
        format!(
            " Retention period has expired for {} data points (informational).",
            expired.len()
        )
    };
    let mut c6 = if missing_entry.is_empty() {
        CriterionResult::new(
            CriterionId::C6,
            CriterionStatus::Satisfied,
            format!(
                "All {total} data points carry a verified dataset entry for {dataset_source} with a retention period.{expiry_note}"
            ),
        )
    } else {
        CriterionResult::new(
            CriterionId::C6,
            CriterionStatus::Violated,
            format!(
                "{} of {total} data points lack a verified dataset entry for {dataset_source}.{expiry_note}",
                missing_entry.len()
            ),
        )
    };
    c6.violating_points = missing_entry;

    vec![c2, c3, c6]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::criteria::flags::FlagRecord;
    use crate::criteria::license::{LicenseId, UseTag};

    fn eval(id: &str) -> PointEvaluation {
        PointEvaluation {
            asset_id: id.into(),
            provenance: ValidationStatus::Valid,
            compatibility: Some(check_license_compat(
                &LicenseId::Cc0,
                crate::provenance::Consent::Granted,
                None,
                &policy(),
            )),
            inconclusive_reason: None,
            has_dataset_entry: true,
            retention_expired: false,
        }
    }

    fn policy() -> DatasetPolicy {
        DatasetPolicy {
            dataset_license: LicenseId::CcBy4,
            intended_uses: vec![UseTag::AiTraining, UseTag::Commercial],
            requires_explicit_consent: true,
            performs_derivatives: false,
        }
    }

    #[test]
    fn clean_points_satisfy_all() {
        let evals: Vec<_> = (0..5).map(|i| eval(&format!("p{i}"))).collect();
        let r = aggregate(&evals, &FlagFile::empty(), "src");
        assert!(r.iter().all(|r| r.is_satisfied()), "{r:?}");
    }

    #[test]
    fn one_incompatible_point() {
        let mut evals: Vec<_> = (0..5).map(|i| eval(&format!("p{i}"))).collect();
        evals[2].compatibility = Some(check_license_compat(
            &LicenseId::CcByNc4,
            crate::provenance::Consent::Granted,
            None,
            &policy(),
        ));
        let r = aggregate(&evals, &FlagFile::empty(), "src");
        assert_eq!(r[0].status, CriterionStatus::Violated);
        assert_eq!(r[0].violating_points, vec!["p2".to_string()]);
        assert!(r[1].is_satisfied() && r[2].is_satisfied());
    }

    #[test]
    fn flag_toggles_c3_without_touching_c2() {
        let mut evals: Vec<_> = (0..3).map(|i| eval(&format!("p{i}"))).collect();
        evals[1].provenance = ValidationStatus::Invalid;
        evals[1].compatibility = None;
        evals[1].inconclusive_reason = Some("provenance invalid (manifest is unsigned)".into());
        evals[1].has_dataset_entry = false;

        let r = aggregate(&evals, &FlagFile::empty(), "src");
        assert_eq!(r[1].status, CriterionStatus::Violated);
        assert_eq!(r[1].violating_points, vec!["p1".to_string()]);
        assert!(r[0].is_satisfied());

        let flags = FlagFile::from_records([FlagRecord {
            asset_id: "p1".into(),
            reason: "unsigned".into(),
            flagged_at: "2024-01-01T00:00:00Z".parse().unwrap(),
        }]);
        let r = aggregate(&evals, &flags, "src");
        assert!(r[1].is_satisfied());
        assert_eq!(r[1].inconclusive_points, vec!["p1".to_string()]);
        assert!(r[0].is_satisfied());
    }

    #[test]
    fn empty_dataset_is_an_error() {
        assert!(matches!(
            assess_dataset_points(&[], &policy(), &FlagFile::empty(), "src"),
            Err(EvalError::EmptyDataset)
        ));
    }
}

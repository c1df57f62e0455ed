//! Admission check for a single candidate data point.

use chrono::Utc;
use serde::{Deserialize, Serialize};

use super::dataset::evaluate_point;
use super::license::DatasetPolicy;
use super::CriterionId;
use crate::provenance::{AssetRef, DatasetEntry, ValidationStatus};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataPointAssessment {
    pub asset_id: String,
    pub compliant: bool,
    pub violated: Vec<CriterionId>,
    pub reasons: Vec<String>,
    pub provenance: ValidationStatus,
}

/// Decides whether `asset` may join a dataset governed by `policy`.
///
/// C2 needs a compatible verdict from verified provenance. Missing, invalid or
/// inconclusive provenance is reported as a C3 obligation (flag or drop) and
/// does not count against C2. C6 is met when `pending_entry` is given or the
/// verified manifest already carries a dataset entry.
pub fn assess_datapoint(
    asset: &AssetRef,
    policy: &DatasetPolicy,
    pending_entry: Option<&DatasetEntry>,
) -> std::io::Result<DataPointAssessment> {
    asset.read_bytes()?;
    let id = asset.name();
    let eval = evaluate_point(&id, asset, policy, None, Utc::now());

    let mut violated = Vec::new();
    let mut reasons = Vec::new();
    if eval.is_incompatible() {
        violated.push(CriterionId::C2);
        let why = eval
            .compatibility
            .as_ref()
            .map(|c| c.reason.as_str())
            .unwrap_or_default();
        reasons.push(format!("C2: {why}"));
    }
    if let Some(why) = &eval.inconclusive_reason {
        violated.push(CriterionId::C3);
        reasons.push(format!("C3: {why}; must be flagged or dropped"));
    }
    if pending_entry.is_none() && !eval.has_dataset_entry {
        violated.push(CriterionId::C6);
        reasons.push(
            "C6: no dataset entry is pending or embedded; the dataset source and retention period must be added".into(),
        );
    }
    Ok(DataPointAssessment {
        asset_id: id,
        compliant: violated.is_empty(),
        violated,
        reasons,
        provenance: eval.provenance,
    })
}

//! Versioned JSON report and its plain-text rendering.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::assess::{DatasetAssessment, Rating};
use crate::criteria::{compute_score, ContractError, CriterionStatus, PointEvaluation};
use crate::evidence::PlatformKind;

pub const REPORT_SCHEMA_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
/// Per-point details beyond this many entries are dropped from reports.
pub const MAX_POINT_DETAILS: usize = 1000;
/// Offending ids printed per criterion in the text format.
const TEXT_ID_LIMIT: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportDataset {
    pub platform: PlatformKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub identifier: Option<String>,
    pub location: String,
    pub dataset_source: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointDetails {
    pub total: usize,
    pub truncated: bool,
    pub items: Vec<PointEvaluation>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub schema_version: u32,
    pub tool_version: String,
    pub dataset: ReportDataset,
    pub assessment: DatasetAssessment,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notices: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<PointDetails>,
}

/// Notice printed whenever a criterion is left for review.
pub fn needs_review_notice(assessment: &DatasetAssessment) -> Option<String> {
    let pending = assessment.needs_review();
    if pending.is_empty() {
        return None;
    }
    let list: Vec<String> = pending.iter().map(ToString::to_string).collect();
    Some(format!(
        "NEEDS REVIEW: {} could not be decided automatically and count as not satisfied. \
         Record a decision with `crs review --set <criterion>=satisfied|violated` to resolve.",
        list.join(", ")
    ))
}

impl ReportDocument {
    pub fn from_rating(rating: &Rating, include_points: bool) -> Self {
        let points = include_points.then(|| PointDetails {
            total: rating.points.len(),
            truncated: rating.points.len() > MAX_POINT_DETAILS,
            items: rating.points.iter().take(MAX_POINT_DETAILS).cloned().collect(),
        });
        Self {
            schema_version: REPORT_SCHEMA_VERSION,
            tool_version: TOOL_VERSION.to_string(),
            dataset: ReportDataset {
                platform: rating.evidence.platform,
                identifier: rating.evidence.identifier.clone(),
                location: rating.evidence.location.clone(),
                dataset_source: rating.dataset_source.clone(),
            },
            assessment: rating.assessment.clone(),
            notices: needs_review_notice(&rating.assessment).into_iter().collect(),
            points,
        }
    }

    /// The stored letter must equal the score recomputed from the results.
    pub fn check(&self) -> Result<(), ContractError> {
        if self.schema_version != REPORT_SCHEMA_VERSION {
            return Err(ContractError(format!(
                "unsupported schema_version {}",
                self.schema_version
            )));
        }
        let recomputed = compute_score(&self.assessment.per_criterion)?;
        if recomputed != self.assessment.score {
            return Err(ContractError(format!(
                "report letter {} disagrees with its results ({})",
                self.assessment.score.letter, recomputed.letter
            )));
        }
        Ok(())
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self, String> {
        let doc: Self = serde_json::from_slice(bytes).map_err(|e| e.to_string())?;
        doc.check().map_err(|e| e.to_string())?;
        Ok(doc)
    }

    pub fn render_text(&self) -> String {
        let a = &self.assessment;
        let mut out = String::new();
        let _ = writeln!(
            out,
            "CRS score: {} ({} of 6 criteria satisfied)",
            a.score.letter, a.score.satisfied_count
        );
        let _ = writeln!(out, "dataset: {} ({})", self.dataset.location, self.dataset.platform);
        let _ = writeln!(out, "dataset source: {}", self.dataset.dataset_source);
        out.push('\n');
        for r in &a.per_criterion {
            let mark = match r.status {
                CriterionStatus::Satisfied => "PASS",
                CriterionStatus::Violated => "FAIL",
                CriterionStatus::NeedsReview => "REVIEW",
            };
            let _ = writeln!(out, "[{mark:<6}] {} {}: {}", r.criterion, r.status, r.criterion.title());
            let _ = writeln!(out, "         {}", r.evidence);
            if !r.violating_points.is_empty() {
                let shown: Vec<&str> = r
                    .violating_points
                    .iter()
                    .take(TEXT_ID_LIMIT)
                    .map(String::as_str)
                    .collect();
                let more = r.violating_points.len().saturating_sub(TEXT_ID_LIMIT);
                let tail = if more > 0 {
                    format!(" (+{more} more)")
                } else {
                    String::new()
                };
                let _ = writeln!(out, "         offending points: {}{tail}", shown.join(", "));
            }
            for s in r.sources.iter().take(3) {
                let _ = writeln!(out, "         source: {}", s.source);
            }
        }
        if !a.flags_file_checked {
            let _ = writeln!(out, "\nnote: no FLAGS.crs.jsonl flag file was found");
        }
        for n in &self.notices {
            let _ = writeln!(out, "\n{n}");
        }
        out
    }
}

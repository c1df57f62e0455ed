//! The six compliance criteria, their verdicts, and the letter score.

pub mod dataset;
pub mod flags;
pub mod license;
pub mod point;
pub mod score;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evidence::{AppliedOverride, EvidenceItem};

pub use dataset::{
    aggregate, assess_dataset_points, evaluate_point, DataPoint, EvalError, PointEvaluation, PointLevelOutcome,
};
pub use flags::{FlagError, FlagFile, FlagRecord, FLAGS_FILE};
pub use license::{check_license_compat, CompatValue, Compatibility, DatasetPolicy, LicenseId, PolicyError, UseTag};
pub use point::{assess_datapoint, DataPointAssessment};
pub use score::{compute_score, CrsScore, Letter};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CriterionId {
    C1,
    C2,
    C3,
    C4,
    C5,
    C6,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Dataset,
    Point,
}

impl CriterionId {
    pub const ALL: [CriterionId; 6] = [
        CriterionId::C1,
        CriterionId::C2,
        CriterionId::C3,
        CriterionId::C4,
        CriterionId::C5,
        CriterionId::C6,
    ];
    pub const DATASET_LEVEL: [CriterionId; 3] = [CriterionId::C1, CriterionId::C4, CriterionId::C5];
    pub const POINT_LEVEL: [CriterionId; 3] = [CriterionId::C2, CriterionId::C3, CriterionId::C6];

    pub fn level(self) -> Level {
        match self {
            CriterionId::C1 | CriterionId::C4 | CriterionId::C5 => Level::Dataset,
            CriterionId::C2 | CriterionId::C3 | CriterionId::C6 => Level::Point,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn title(self) -> &'static str {
        match self {
            CriterionId::C1 => "transparent, reproducible sourcing and processing",
            CriterionId::C2 => "license and allowed-use compliance of every data point",
            CriterionId::C3 => "inconclusive data points are flagged",
            CriterionId::C4 => "opt-out mechanism",
            CriterionId::C5 => "dated trace log of changes",
            CriterionId::C6 => "dataset source and retention period embedded in every data point",
        }
    }
}

impl fmt::Display for CriterionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "C{}", self.index() + 1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown criterion {0:?} (expected C1..C6)")]
pub struct UnknownCriterion(pub String);

impl FromStr for CriterionId {
    type Err = UnknownCriterion;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CriterionId::ALL
            .into_iter()
            .find(|c| c.to_string().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| UnknownCriterion(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CriterionStatus {
    Satisfied,
    Violated,
    NeedsReview,
}

impl fmt::Display for CriterionStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CriterionStatus::Satisfied => "satisfied",
            CriterionStatus::Violated => "violated",
            CriterionStatus::NeedsReview => "needs-review",
        })
    }
}

/// Verdict for one criterion, with the reasoning behind it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub criterion: CriterionId,
    pub level: Level,
    pub status: CriterionStatus,
    pub evidence: String,
    #[serde(default)]
    pub violating_points: Vec<String>,
    #[serde(default)]
    pub inconclusive_points: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sources: Vec<EvidenceItem>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub review: Option<AppliedOverride>,
}

impl CriterionResult {
    pub fn new(criterion: CriterionId, status: CriterionStatus, evidence: impl Into<String>) -> Self {
        Self {
            criterion,
            level: criterion.level(),
            status,
            evidence: evidence.into(),
            violating_points: Vec::new(),
            inconclusive_points: Vec::new(),
            sources: Vec::new(),
            review: None,
        }
    }

    pub fn is_satisfied(&self) -> bool {
        self.status == CriterionStatus::Satisfied
    }

    /// Checks the per-result invariants.
    pub fn check(&self) -> Result<(), ContractError> {
        if self.level != self.criterion.level() {
            return Err(ContractError(format!(
                "{} reported with the wrong level",
                self.criterion
            )));
        }
        if self.status == CriterionStatus::NeedsReview && self.criterion.level() == Level::Point {
            return Err(ContractError(format!(
                "{} is point-level and cannot need review",
                self.criterion
            )));
        }
        if self.status == CriterionStatus::Satisfied && !self.violating_points.is_empty() {
            return Err(ContractError(format!(
                "{} is satisfied but lists violating points",
                self.criterion
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("contract violation: {0}")]
pub struct ContractError(pub String);

//! Compliance rating for AI training datasets.
//!
//! Data points carry signed provenance manifests; datasets are judged on six
//! criteria and receive a letter from A (all satisfied) to G (none).

pub mod api;
pub mod assess;
pub mod canonical;
pub mod corpus;
pub mod criteria;
pub mod evidence;
mod hexser;
pub mod provenance;
pub mod report;
pub mod tracelog;

pub use assess::{assess_dataset, rate_dataset, rate_snapshot, AssessError, DatasetAssessment, RateOptions, Rating};
pub use criteria::{
    assess_datapoint, compute_score, ContractError, CriterionId, CriterionResult, CriterionStatus, CrsScore,
    DataPointAssessment, DatasetPolicy, Letter, LicenseId, UseTag,
};
pub use evidence::{fetch_evidence, DatasetEvidence, DatasetRef, FetchConfig, PlatformKind};
pub use provenance::{AssetRef, ProvenanceManifest, ValidationStatus};
pub use report::ReportDocument;

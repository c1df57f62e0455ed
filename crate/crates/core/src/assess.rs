//! Full dataset rating: point-level checks, dataset-level inference,
//! review overrides and the final letter.

use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use walkdir::WalkDir;

use crate::criteria::{
    assess_dataset_points, compute_score, ContractError, CriterionId, CriterionResult, CriterionStatus, CrsScore,
    DataPoint, DatasetPolicy, EvalError, FlagError, FlagFile, PointEvaluation, PolicyError, FLAGS_FILE,
};
use crate::evidence::snapshot::{load_evidence, FILES_DIR};
use crate::evidence::{
    apply_overrides, infer_dataset_criteria, load_overrides, DatasetEvidence, DatasetRef, FetchError,
    HeuristicProvider, InferenceProvider, OverrideError, ReviewOverride, CARD_FILE, OVERRIDES_FILE,
};
use crate::provenance::{is_sidecar, sidecar_path, AssetRef, MediaKind};

/// Policy file read from a snapshot root when no policy is passed explicitly.
pub const POLICY_FILE: &str = "POLICY.crs.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetAssessment {
    /// C1..C6 in order.
    pub per_criterion: Vec<CriterionResult>,
    pub score: CrsScore,
    pub flags_file_checked: bool,
    pub generated_at: DateTime<Utc>,
}

impl DatasetAssessment {
    pub fn result(&self, criterion: CriterionId) -> &CriterionResult {
        self.per_criterion
            .iter()
            .find(|r| r.criterion == criterion)
            .expect("assessment holds every criterion")
    }

    pub fn satisfied(&self) -> Vec<CriterionId> {
        self.per_criterion
            .iter()
            .filter(|r| r.is_satisfied())
            .map(|r| r.criterion)
            .collect()
    }

    pub fn needs_review(&self) -> Vec<CriterionId> {
        self.per_criterion
            .iter()
            .filter(|r| r.status == CriterionStatus::NeedsReview)
            .map(|r| r.criterion)
            .collect()
    }

    /// Re-checks the score against the results.
    pub fn check(&self) -> Result<(), ContractError> {
        for r in &self.per_criterion {
            r.check()?;
        }
        let expected = compute_score(&self.per_criterion)?;
        if expected != self.score {
            return Err(ContractError(format!(
                "score {} does not match {} satisfied criteria",
                self.score.letter, expected.satisfied_count
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum AssessError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Contract(#[from] ContractError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("no dataset policy given and {0} not found")]
    NoPolicy(String),
    #[error("flag file: {0}")]
    Flags(#[from] FlagError),
    #[error(transparent)]
    Overrides(#[from] OverrideError),
    #[error(transparent)]
    Fetch(#[from] FetchError),
    #[error("cannot scan data points under {path}: {message}")]
    Scan { path: String, message: String },
    #[error("cannot build a thread pool: {0}")]
    Pool(String),
}

/// Rates a dataset from its points and already-gathered evidence.
pub fn assess_dataset(
    points: &[DataPoint],
    policy: &DatasetPolicy,
    flags: &FlagFile,
    evidence: &DatasetEvidence,
    dataset_source: &str,
    provider: &dyn InferenceProvider,
    overrides: &[ReviewOverride],
) -> Result<(DatasetAssessment, Vec<PointEvaluation>), AssessError> {
    policy.validate()?;
    let outcome = assess_dataset_points(points, policy, flags, dataset_source)?;
    let dataset_level = apply_overrides(&infer_dataset_criteria(evidence, provider), overrides)?;

    let mut per_criterion: Vec<CriterionResult> = dataset_level.into_iter().chain(outcome.results).collect();
    per_criterion.sort_by_key(|r| r.criterion);
    let score = compute_score(&per_criterion)?;
    let assessment = DatasetAssessment {
        per_criterion,
        score,
        flags_file_checked: flags.checked,
        generated_at: Utc::now(),
    };
    assessment.check()?;
    Ok((assessment, outcome.points))
}

fn reserved_root_file(name: &str) -> bool {
    name == CARD_FILE || name == POLICY_FILE || name.ends_with(".crs.json") || name.ends_with(".crs.jsonl")
}

/// Data points under `root/files` (or `root` itself when there is no `files/`).
///
/// A file is a point when it is recognized media or has a sidecar manifest.
/// Ids are paths relative to that directory with `/` separators.
pub fn discover_points(root: &Path) -> Result<Vec<DataPoint>, AssessError> {
    let files = root.join(FILES_DIR);
    let base = if files.is_dir() { files } else { root.to_path_buf() };
    let scan_err = |message: String| AssessError::Scan {
        path: base.display().to_string(),
        message,
    };
    let mut points = Vec::new();
    for entry in WalkDir::new(&base).sort_by_file_name() {
        let entry = entry.map_err(|e| scan_err(e.to_string()))?;
        let path = entry.path();
        if !entry.file_type().is_file() || is_sidecar(path) {
            continue;
        }
        let rel = path
            .strip_prefix(&base)
            .expect("walk stays under base")
            .to_string_lossy()
            .replace('\\', "/");
        if base == root && !rel.contains('/') && reserved_root_file(&rel) {
            continue;
        }
        let asset = AssetRef::from_path(path).map_err(|e| scan_err(format!("{rel}: {e}")))?;
        if asset.media_kind != MediaKind::Other || sidecar_path(path).is_file() {
            points.push(DataPoint { id: rel, asset });
        }
    }
    Ok(points)
}

/// Knobs for [`rate_dataset`].
#[derive(Default)]
pub struct RateOptions<'a> {
    /// Overrides `POLICY.crs.json` in the data root.
    pub policy: Option<DatasetPolicy>,
    /// Overrides the source declared in the card.
    pub dataset_source: Option<String>,
    /// Defaults to the heuristic provider.
    pub provider: Option<&'a dyn InferenceProvider>,
    /// Worker threads for point checks; `None` uses all cores.
    pub jobs: Option<usize>,
}

/// A finished rating with everything needed to report it.
#[derive(Debug, Clone)]
pub struct Rating {
    pub assessment: DatasetAssessment,
    pub points: Vec<PointEvaluation>,
    pub evidence: DatasetEvidence,
    pub dataset_source: String,
    pub data_root: PathBuf,
    pub overrides: Vec<ReviewOverride>,
}

/// Rates a local snapshot: points, flags, overrides and evidence all come from `root`.
pub fn rate_snapshot(root: &Path, options: &RateOptions<'_>) -> Result<Rating, AssessError> {
    let evidence = load_evidence(root, None)?;
    let fallback = DatasetRef::local(root).default_source();
    rate_dataset(root, evidence, &fallback, options)
}

/// Rates the points stored under `data_root` against `evidence` gathered elsewhere.
///
/// The dataset source is, in order: the option, the card's `dataset_source`,
/// then `fallback_source`.
pub fn rate_dataset(
    data_root: &Path,
    evidence: DatasetEvidence,
    fallback_source: &str,
    options: &RateOptions<'_>,
) -> Result<Rating, AssessError> {
    let policy = match &options.policy {
        Some(p) => p.clone(),
        None => {
            let path = data_root.join(POLICY_FILE);
            if !path.is_file() {
                return Err(AssessError::NoPolicy(path.display().to_string()));
            }
            DatasetPolicy::load(&path)?
        }
    };
    let dataset_source = options
        .dataset_source
        .clone()
        .or_else(|| evidence.dataset_source.clone())
        .unwrap_or_else(|| fallback_source.to_string());
    let flags = FlagFile::load(&data_root.join(FLAGS_FILE))?;
    let overrides = load_overrides(&data_root.join(OVERRIDES_FILE))?;
    let points = discover_points(data_root)?;
    let heuristic = HeuristicProvider;
    let provider = options.provider.unwrap_or(&heuristic);

    let run = || {
        assess_dataset(
            &points,
            &policy,
            &flags,
            &evidence,
            &dataset_source,
            provider,
            &overrides,
        )
    };
    let (assessment, evaluations) = match options.jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| AssessError::Pool(e.to_string()))?
            .install(run)?,
        None => run()?,
    };
    Ok(Rating {
        assessment,
        points: evaluations,
        evidence,
        dataset_source,
        data_root: data_root.to_path_buf(),
        overrides,
    })
}

//! Dataset-level evidence for C1, C4 and C5.
//!
//! Evidence comes from the distribution platform: dataset-card keys on
//! platforms with standardized metadata, repository text elsewhere. Offline
//! snapshots mirror the same layouts on disk:
//!
//! ```text
//! <root>/card.json            platform, identifier, dataset_source, metadata
//! <root>/files/**             data points, sidecars, repository text
//! <root>/CHANGES.crs.jsonl    trace log
//! <root>/FLAGS.crs.jsonl      flagged data points
//! <root>/OVERRIDES.crs.json   human review decisions
//! ```

pub mod heuristic;
pub mod infer;
pub mod live;
pub mod overrides;
pub mod snapshot;

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Duration;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use heuristic::{HeuristicProvider, HttpProvider, InferenceProvider, ProviderVerdict};
pub use infer::infer_dataset_criteria;
pub use overrides::{
    append_override, apply_overrides, load_overrides, AppliedOverride, OverrideError, OverrideStatus, ReviewOverride,
    OVERRIDES_FILE,
};

pub const CARD_FILE: &str = "card.json";
pub const KEY_REPRODUCIBILITY: &str = "crs.reproducibility";
pub const KEY_OPT_OUT: &str = "crs.opt_out";
pub const KEY_TRACE_LOG: &str = "crs.trace_log";
pub const KEY_TRACE_LOG_HEAD: &str = "crs.trace_log_head";
pub const TOKEN_ENV: &str = "CRS_PLATFORM_TOKEN";
pub const MAX_EXCERPT: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlatformKind {
    Huggingface,
    Kaggle,
    Github,
    CustomUrl,
    Local,
}

impl PlatformKind {
    pub const ALL: [PlatformKind; 5] = [
        PlatformKind::Huggingface,
        PlatformKind::Kaggle,
        PlatformKind::Github,
        PlatformKind::CustomUrl,
        PlatformKind::Local,
    ];

    /// Platforms whose dataset pages carry standardized metadata.
    pub fn has_standard_metadata(self) -> bool {
        matches!(self, PlatformKind::Huggingface | PlatformKind::Kaggle)
    }

    /// Platforms where any inferred verdict must be confirmed by a reviewer.
    pub fn requires_review(self) -> bool {
        matches!(self, PlatformKind::Github | PlatformKind::CustomUrl)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PlatformKind::Huggingface => "huggingface",
            PlatformKind::Kaggle => "kaggle",
            PlatformKind::Github => "github",
            PlatformKind::CustomUrl => "custom-url",
            PlatformKind::Local => "local",
        }
    }
}

impl fmt::Display for PlatformKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PlatformKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PlatformKind::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| format!("unknown platform {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetRef {
    pub platform: PlatformKind,
    pub identifier: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid {platform} dataset identifier {identifier:?}: {reason}")]
pub struct RefError {
    pub platform: PlatformKind,
    pub identifier: String,
    pub reason: &'static str,
}

impl DatasetRef {
    pub fn new(platform: PlatformKind, identifier: impl Into<String>) -> Result<Self, RefError> {
        let r = Self {
            platform,
            identifier: identifier.into(),
        };
        r.validate()?;
        Ok(r)
    }

    pub fn local(path: impl Into<PathBuf>) -> Self {
        Self {
            platform: PlatformKind::Local,
            identifier: path.into().display().to_string(),
        }
    }

    pub fn validate(&self) -> Result<(), RefError> {
        let fail = |reason| {
            Err(RefError {
                platform: self.platform,
                identifier: self.identifier.clone(),
                reason,
            })
        };
        let id = self.identifier.trim();
        if id.is_empty() {
            return fail("identifier is empty");
        }
        let owner_name = |s: &str| {
            let parts: Vec<&str> = s.split('/').collect();
            parts.len() == 2
                && parts
                    .iter()
                    .all(|p| !p.is_empty() && p.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c)))
        };
        match self.platform {
            PlatformKind::Huggingface | PlatformKind::Kaggle if !owner_name(id) => fail("expected <owner>/<name>"),
            PlatformKind::Github => {
                let stripped = id
                    .strip_prefix("https://github.com/")
                    .unwrap_or(id)
                    .trim_end_matches('/')
                    .trim_end_matches(".git");
                if owner_name(stripped) {
                    Ok(())
                } else {
                    fail("expected <owner>/<repo> or a github.com URL")
                }
            }
            PlatformKind::CustomUrl if !(id.starts_with("http://") || id.starts_with("https://")) => {
                fail("expected an http(s) URL")
            }
            _ => Ok(()),
        }
    }

    /// Canonical dataset identity used for C6 matching.
    pub fn default_source(&self) -> String {
        match self.platform {
            PlatformKind::Huggingface => format!("https://huggingface.co/datasets/{}", self.identifier),
            PlatformKind::Kaggle => format!("https://www.kaggle.com/datasets/{}", self.identifier),
            PlatformKind::Github => {
                let id = self.identifier.trim_end_matches('/').trim_end_matches(".git");
                if id.starts_with("https://") {
                    id.to_string()
                } else {
                    format!("https://github.com/{id}")
                }
            }
            PlatformKind::CustomUrl => self.identifier.clone(),
            PlatformKind::Local => {
                let p = std::fs::canonicalize(&self.identifier).unwrap_or_else(|_| PathBuf::from(&self.identifier));
                format!("file://{}", p.display())
            }
        }
    }
}

/// A located piece of evidence: where it came from and a short excerpt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvidenceItem {
    pub source: String,
    pub excerpt: String,
}

impl EvidenceItem {
    /// Builds an item, cutting the excerpt to at most 500 characters.
    pub fn new(source: impl Into<String>, excerpt: impl AsRef<str>) -> Self {
        Self {
            source: source.into(),
            excerpt: excerpt.as_ref().chars().take(MAX_EXCERPT).collect(),
        }
    }
}

/// A text document from the dataset repository.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusDoc {
    pub path: String,
    pub text: String,
}

/// Raw trace-log bytes found for the dataset, with the published head if any.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocatedTraceLog {
    pub source: String,
    pub bytes: Vec<u8>,
    pub anchor: Option<[u8; 32]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetEvidence {
    /// Platform whose conventions apply (for snapshots, the mirrored one).
    pub platform: PlatformKind,
    pub identifier: Option<String>,
    /// Where the evidence was read from (directory or URL).
    pub location: String,
    pub card_present: bool,
    pub dataset_source: Option<String>,
    pub c1_docs: Vec<EvidenceItem>,
    pub c4_optout: Option<EvidenceItem>,
    pub c5_tracelog: Option<LocatedTraceLog>,
    /// Card metadata flattened to dotted keys.
    pub raw_metadata: BTreeMap<String, String>,
    pub corpus: Vec<CorpusDoc>,
    pub fetched_at: DateTime<Utc>,
}

impl DatasetEvidence {
    pub fn empty(platform: PlatformKind, location: impl Into<String>) -> Self {
        Self {
            platform,
            identifier: None,
            location: location.into(),
            card_present: false,
            dataset_source: None,
            c1_docs: Vec::new(),
            c4_optout: None,
            c5_tracelog: None,
            raw_metadata: BTreeMap::new(),
            corpus: Vec::new(),
            fetched_at: Utc::now(),
        }
    }

    /// Looks up a card key either verbatim or as the suffix of a nested key.
    pub fn card_value(&self, key: &str) -> Option<&str> {
        if let Some(v) = self.raw_metadata.get(key) {
            return Some(v);
        }
        let suffix = format!(".{key}");
        self.raw_metadata
            .iter()
            .find(|(k, _)| k.ends_with(&suffix))
            .map(|(_, v)| v.as_str())
    }

    /// True when card keys are authoritative for this evidence.
    pub fn uses_card_keys(&self) -> bool {
        self.platform.has_standard_metadata() || (self.platform == PlatformKind::Local && self.card_present)
    }

    /// Fills the typed evidence fields from `raw_metadata`.
    pub(crate) fn populate_from_card(&mut self, card_location: &str) {
        if let Some(v) = self.card_value(KEY_REPRODUCIBILITY).map(str::to_owned) {
            self.c1_docs
                .push(EvidenceItem::new(format!("{card_location}#{KEY_REPRODUCIBILITY}"), v));
        }
        if let Some(v) = self.card_value(KEY_OPT_OUT).map(str::to_owned) {
            self.c4_optout = Some(EvidenceItem::new(format!("{card_location}#{KEY_OPT_OUT}"), v));
        }
    }

    pub(crate) fn trace_log_anchor(&self) -> Option<[u8; 32]> {
        let text = self.card_value(KEY_TRACE_LOG_HEAD)?;
        let mut out = [0u8; 32];
        hex::decode_to_slice(text.trim(), &mut out).ok()?;
        Some(out)
    }
}

/// Flattens nested JSON objects into dotted keys with string values.
pub fn flatten_metadata(value: &serde_json::Value) -> BTreeMap<String, String> {
    fn walk(prefix: &str, v: &serde_json::Value, out: &mut BTreeMap<String, String>) {
        match v {
            serde_json::Value::Object(map) => {
                for (k, child) in map {
                    let key = if prefix.is_empty() {
                        k.clone()
                    } else {
                        format!("{prefix}.{k}")
                    };
                    walk(&key, child, out);
                }
            }
            serde_json::Value::Null => {}
            serde_json::Value::String(s) => {
                out.insert(prefix.to_string(), s.clone());
            }
            serde_json::Value::Array(items) => {
                let joined: Vec<String> = items
                    .iter()
                    .map(|i| match i {
                        serde_json::Value::String(s) => s.clone(),
                        other => other.to_string(),
                    })
                    .collect();
                out.insert(prefix.to_string(), joined.join(", "));
            }
            other => {
                out.insert(prefix.to_string(), other.to_string());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk("", value, &mut out);
    out
}

#[derive(Debug, Error)]
pub enum FetchError {
    #[error("network failure fetching {url}: {message}")]
    Network { url: String, message: String },
    #[error("rate limited by {url} after {attempts} attempts")]
    RateLimited { url: String, attempts: u32 },
    #[error("dataset not found: {0}")]
    NotFound(String),
    #[error("unexpected HTTP status {status} from {url}")]
    Http { url: String, status: u16 },
    #[error("malformed platform response from {url}: {message}")]
    Malformed { url: String, message: String },
    #[error(transparent)]
    Ref(#[from] RefError),
    #[error("snapshot I/O error: {0}")]
    Io(#[from] std::io::Error),
}

impl FetchError {
    pub fn is_retryable(&self) -> bool {
        matches!(self, FetchError::Network { .. } | FetchError::RateLimited { .. })
    }
}

/// Base URLs of the platform APIs; overridable for mirrors and tests.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Endpoints {
    pub huggingface: String,
    pub kaggle: String,
    pub github_api: String,
    pub github_raw: String,
}

impl Default for Endpoints {
    fn default() -> Self {
        Self {
            huggingface: "https://huggingface.co".into(),
            kaggle: "https://www.kaggle.com".into(),
            github_api: "https://api.github.com".into(),
            github_raw: "https://raw.githubusercontent.com".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FetchConfig {
    /// When set, evidence is read from this snapshot instead of the network.
    pub snapshot: Option<PathBuf>,
    pub endpoints: Endpoints,
    pub token: Option<String>,
    /// Concurrent requests; clamped to 1..=4.
    pub max_concurrency: usize,
    pub max_attempts: u32,
    pub base_backoff: Duration,
    pub timeout: Duration,
    /// Upper bound on repository text files pulled for the corpus.
    pub max_corpus_files: usize,
}

impl Default for FetchConfig {
    fn default() -> Self {
        Self {
            snapshot: None,
            endpoints: Endpoints::default(),
            token: std::env::var(TOKEN_ENV).ok().filter(|t| !t.is_empty()),
            max_concurrency: 4,
            max_attempts: 4,
            base_backoff: Duration::from_millis(250),
            timeout: Duration::from_secs(30),
            max_corpus_files: 32,
        }
    }
}

impl FetchConfig {
    pub fn offline(snapshot: impl Into<PathBuf>) -> Self {
        Self {
            snapshot: Some(snapshot.into()),
            ..Self::default()
        }
    }
}

/// Gathers evidence for `dataset`, from a snapshot when one is configured or
/// the reference is local, otherwise from the live platform.
pub fn fetch_evidence(dataset: &DatasetRef, config: &FetchConfig) -> Result<DatasetEvidence, FetchError> {
    dataset.validate()?;
    if dataset.platform == PlatformKind::Local {
        return snapshot::load_evidence(std::path::Path::new(&dataset.identifier), None);
    }
    if let Some(root) = &config.snapshot {
        return snapshot::load_evidence(root, Some(dataset.platform));
    }
    live::fetch(dataset, config)
}

/// Text-like files worth scanning for dataset documentation.
pub(crate) fn is_text_document(path: &str) -> bool {
    let lower = path.to_ascii_lowercase();
    let name = lower.rsplit('/').next().unwrap_or(&lower);
    if name.ends_with(crate::provenance::SIDECAR_SUFFIX) {
        return false;
    }
    const EXTS: [&str; 17] = [
        ".md", ".txt", ".rst", ".py", ".sh", ".ipynb", ".rs", ".r", ".jl", ".js", ".ts", ".yaml", ".yml", ".toml",
        ".cfg", ".html", ".htm",
    ];
    EXTS.iter().any(|e| name.ends_with(e))
        || matches!(
            name,
            "readme" | "changelog" | "changes" | "history" | "license" | "makefile"
        )
}

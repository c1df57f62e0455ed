//! The provenance manifest data model and its canonical JSON encoding.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::hash::ContentHash;
use super::retention::RetentionPeriod;
use crate::canonical;
use crate::criteria::license::{LicenseId, UseTag};

pub const MANIFEST_VERSION: &str = "1.0.0";

/// Whether the creator allows the asset to be used for AI training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Consent {
    Granted,
    Denied,
    Unspecified,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Created,
    Edited,
    Transcoded,
    Annotated,
    Other,
}

/// One step in the asset's history.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionRecord {
    pub timestamp: DateTime<Utc>,
    pub action: Action,
    pub actor: String,
    pub note: String,
}

/// Records that a dataset included this asset, and for how long.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetEntry {
    pub dataset_source: String,
    pub retention_period: RetentionPeriod,
    pub added_at: DateTime<Utc>,
}

impl DatasetEntry {
    pub fn new(dataset_source: impl Into<String>, retention_period: RetentionPeriod, added_at: DateTime<Utc>) -> Self {
        Self {
            dataset_source: dataset_source.into(),
            retention_period,
            added_at,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignatureScheme {
    Ed25519,
}

/// Detached signature over the canonical bytes of every other manifest field.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignatureBlock {
    pub scheme: SignatureScheme,
    #[serde(with = "crate::hexser::array32")]
    pub public_key: [u8; 32],
    #[serde(with = "crate::hexser::array64")]
    pub signature: [u8; 64],
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProvenanceManifest {
    pub manifest_version: String,
    pub asset_binding: ContentHash,
    pub creator: String,
    pub license: LicenseId,
    pub ai_training_consent: Consent,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub allowed_uses: Option<Vec<UseTag>>,
    pub provenance_chain: Vec<ActionRecord>,
    #[serde(default)]
    pub dataset_entries: Vec<DatasetEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signature: Option<SignatureBlock>,
}

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("manifest parse error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("manifest structure error: {0}")]
    Structure(String),
}

impl ManifestError {
    fn from_serde(input: &[u8], err: serde_json::Error) -> Self {
        ManifestError::Syntax {
            offset: canonical::byte_offset(input, err.line(), err.column()),
            message: err.to_string(),
        }
    }
}

impl ProvenanceManifest {
    /// Checks the invariants that serde cannot express.
    pub fn check_structure(&self) -> Result<(), ManifestError> {
        let bad = |m: String| Err(ManifestError::Structure(m));
        if !is_semver(&self.manifest_version) {
            return bad(format!(
                "manifest_version {:?} is not a semantic version",
                self.manifest_version
            ));
        }
        if self.provenance_chain.is_empty() {
            return bad("provenance_chain is empty".into());
        }
        if let Some(pos) = self
            .provenance_chain
            .windows(2)
            .position(|w| w[1].timestamp < w[0].timestamp)
        {
            return bad(format!("provenance_chain goes back in time at record {}", pos + 1));
        }
        if let Some(pos) = self
            .dataset_entries
            .iter()
            .position(|e| e.dataset_source.trim().is_empty())
        {
            return bad(format!("dataset_entries[{pos}] has an empty dataset_source"));
        }
        Ok(())
    }

    /// Canonical bytes of every field except the signature block.
    pub fn signing_bytes(&self) -> Vec<u8> {
        let mut unsigned = self.clone();
        unsigned.signature = None;
        canonical::to_canonical_bytes(&unsigned).expect("manifest serialization is infallible")
    }

    /// True when a dataset entry names `source` after URI normalization.
    pub fn has_entry_for(&self, source: &str) -> bool {
        let wanted = normalize_source(source);
        self.dataset_entries
            .iter()
            .any(|e| normalize_source(&e.dataset_source) == wanted)
    }
}

fn is_semver(v: &str) -> bool {
    let core = v.split(['-', '+']).next().unwrap_or("");
    let parts: Vec<&str> = core.split('.').collect();
    parts.len() == 3
        && parts
            .iter()
            .all(|p| !p.is_empty() && p.bytes().all(|b| b.is_ascii_digit()) && (p.len() == 1 || !p.starts_with('0')))
}

/// Lowercases scheme and host and drops trailing slashes; non-URI identifiers only lose trailing slashes.
pub fn normalize_source(source: &str) -> String {
    let trimmed = source.trim().trim_end_matches('/');
    match trimmed.split_once("://") {
        Some((scheme, rest)) => {
            let (authority, path) = match rest.find('/') {
                Some(i) => rest.split_at(i),
                None => (rest, ""),
            };
            format!(
                "{}://{}{}",
                scheme.to_ascii_lowercase(),
                authority.to_ascii_lowercase(),
                path
            )
        }
        None => trimmed.to_string(),
    }
}

/// Canonical bytes: sorted keys, no insignificant whitespace.
pub fn serialize_manifest(manifest: &ProvenanceManifest) -> Vec<u8> {
    canonical::to_canonical_bytes(manifest).expect("manifest serialization is infallible")
}

pub fn parse_manifest(bytes: &[u8]) -> Result<ProvenanceManifest, ManifestError> {
    let manifest: ProvenanceManifest =
        serde_json::from_slice(bytes).map_err(|e| ManifestError::from_serde(bytes, e))?;
    manifest.check_structure()?;
    Ok(manifest)
}

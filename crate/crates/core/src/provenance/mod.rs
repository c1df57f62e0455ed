//! Per-asset provenance: signed manifests stored as `<asset>.prov.json` sidecars.
//!
//! Three outcomes are kept apart throughout: a manifest that is *missing*, one
//! that is present but *unparseable*, and one that parses but fails the
//! binding or signature check (*invalid*).

pub mod hash;
pub mod manifest;
pub mod retention;
pub mod signing;

use std::fmt;
use std::io;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use ed25519_dalek::SigningKey;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use hash::{compute_content_hash, AssetRef, ContentHash, HashAlgorithm, Locator, MediaKind};
pub use manifest::{
    normalize_source, parse_manifest, serialize_manifest, Action, ActionRecord, Consent, DatasetEntry, ManifestError,
    ProvenanceManifest, SignatureBlock, SignatureScheme, MANIFEST_VERSION,
};
pub use retention::{IsoDuration, RetentionParseError, RetentionPeriod};
pub use signing::{sign_manifest, verify_signature, KeyError};

pub const SIDECAR_SUFFIX: &str = ".prov.json";
pub const EMBED_NOTE: &str = "dataset-entry-added";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValidationStatus {
    Valid,
    Invalid,
    Missing,
}

impl fmt::Display for ValidationStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ValidationStatus::Valid => "valid",
            ValidationStatus::Invalid => "invalid",
            ValidationStatus::Missing => "missing",
        })
    }
}

/// Why a present manifest failed validation.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InvalidReason {
    #[error("asset bytes unreadable: {0}")]
    Unreadable(String),
    #[error("asset hash does not match the manifest binding")]
    BindingMismatch,
    #[error("manifest is unsigned")]
    Unsigned,
    #[error("signature does not verify")]
    BadSignature,
    #[error("{0}")]
    Structure(String),
}

#[derive(Debug, Error)]
pub enum ExtractError {
    #[error("cannot read sidecar {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("sidecar {path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: ManifestError,
    },
}

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("refusing to embed into unverifiable provenance: {0}")]
    Refused(String),
    #[error("dataset entry added_at {added_at} precedes the last provenance record")]
    OutOfOrder { added_at: DateTime<Utc> },
    #[error(transparent)]
    Key(#[from] KeyError),
}

/// Location of the sidecar manifest for an asset file.
pub fn sidecar_path(asset_path: &Path) -> PathBuf {
    let mut name = asset_path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(SIDECAR_SUFFIX);
    asset_path.with_file_name(name)
}

pub fn is_sidecar(path: &Path) -> bool {
    path.file_name()
        .and_then(|n| n.to_str())
        .is_some_and(|n| n.ends_with(SIDECAR_SUFFIX))
}

/// Source of manifests for an asset. The sidecar reader is the only built-in
/// one; readers for manifests embedded in media containers plug in here.
pub trait ManifestReader: Send + Sync {
    fn read(&self, asset: &AssetRef) -> Result<Option<ProvenanceManifest>, ExtractError>;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SidecarReader;

impl ManifestReader for SidecarReader {
    fn read(&self, asset: &AssetRef) -> Result<Option<ProvenanceManifest>, ExtractError> {
        let Some(path) = asset.path() else {
            return Ok(None);
        };
        let sidecar = sidecar_path(path);
        let bytes = match std::fs::read(&sidecar) {
            Ok(b) => b,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(None),
            Err(source) => {
                return Err(ExtractError::Io {
                    path: sidecar.display().to_string(),
                    source,
                })
            }
        };
        parse_manifest(&bytes).map(Some).map_err(|source| ExtractError::Parse {
            path: sidecar.display().to_string(),
            source,
        })
    }
}

/// Finds the asset's manifest with the default sidecar reader.
pub fn extract_manifest(asset: &AssetRef) -> Result<Option<ProvenanceManifest>, ExtractError> {
    SidecarReader.read(asset)
}

/// Tries each reader in turn; the first one that finds a manifest wins.
pub fn extract_manifest_with(
    readers: &[&dyn ManifestReader],
    asset: &AssetRef,
) -> Result<Option<ProvenanceManifest>, ExtractError> {
    for reader in readers {
        if let Some(m) = reader.read(asset)? {
            return Ok(Some(m));
        }
    }
    Ok(None)
}

pub fn write_sidecar(asset_path: &Path, manifest: &ProvenanceManifest) -> io::Result<PathBuf> {
    let path = sidecar_path(asset_path);
    std::fs::write(&path, serialize_manifest(manifest))?;
    Ok(path)
}

/// Full check of a manifest against its asset, with the failure cause.
pub fn check_manifest(asset: &AssetRef, manifest: &ProvenanceManifest) -> Result<(), InvalidReason> {
    manifest
        .check_structure()
        .map_err(|e| InvalidReason::Structure(e.to_string()))?;
    let actual = compute_content_hash(asset).map_err(|e| InvalidReason::Unreadable(e.to_string()))?;
    if actual != manifest.asset_binding {
        return Err(InvalidReason::BindingMismatch);
    }
    if manifest.signature.is_none() {
        return Err(InvalidReason::Unsigned);
    }
    if !verify_signature(manifest) {
        return Err(InvalidReason::BadSignature);
    }
    Ok(())
}

/// `Valid` iff the binding matches the asset bytes and the signature verifies.
pub fn validate_manifest(asset: &AssetRef, manifest: &ProvenanceManifest) -> ValidationStatus {
    match check_manifest(asset, manifest) {
        Ok(()) => ValidationStatus::Valid,
        Err(_) => ValidationStatus::Invalid,
    }
}

/// Everything the criteria need to know about one asset's provenance.
#[derive(Debug)]
pub enum ProvenanceState {
    Missing,
    Unparseable(ExtractError),
    Invalid {
        manifest: Box<ProvenanceManifest>,
        reason: InvalidReason,
    },
    Valid(Box<ProvenanceManifest>),
}

impl ProvenanceState {
    pub fn status(&self) -> ValidationStatus {
        match self {
            ProvenanceState::Missing => ValidationStatus::Missing,
            ProvenanceState::Unparseable(_) | ProvenanceState::Invalid { .. } => ValidationStatus::Invalid,
            ProvenanceState::Valid(_) => ValidationStatus::Valid,
        }
    }

    pub fn valid_manifest(&self) -> Option<&ProvenanceManifest> {
        match self {
            ProvenanceState::Valid(m) => Some(m),
            _ => None,
        }
    }
}

/// Extracts and validates the manifest of `asset` in one step.
pub fn inspect_provenance(asset: &AssetRef) -> ProvenanceState {
    match extract_manifest(asset) {
        Ok(None) => ProvenanceState::Missing,
        Err(e) => ProvenanceState::Unparseable(e),
        Ok(Some(manifest)) => match check_manifest(asset, &manifest) {
            Ok(()) => ProvenanceState::Valid(Box::new(manifest)),
            Err(reason) => ProvenanceState::Invalid {
                manifest: Box::new(manifest),
                reason,
            },
        },
    }
}

/// Appends `entry` and an audit record, then re-signs with the dataset author's key.
///
/// The input manifest must validate against `asset`; the previous signer's key
/// is kept in the appended record's actor field.
pub fn embed_dataset_entry(
    asset: &AssetRef,
    manifest: &ProvenanceManifest,
    entry: DatasetEntry,
    signing_key: &SigningKey,
) -> Result<ProvenanceManifest, EmbedError> {
    check_manifest(asset, manifest).map_err(|r| EmbedError::Refused(r.to_string()))?;
    if entry.dataset_source.trim().is_empty() {
        return Err(EmbedError::Refused("dataset_source is empty".into()));
    }
    let last = manifest
        .provenance_chain
        .last()
        .map(|r| r.timestamp)
        .expect("validated manifests have a non-empty chain");
    if entry.added_at < last {
        return Err(EmbedError::OutOfOrder {
            added_at: entry.added_at,
        });
    }
    let prior_signer = manifest
        .signature
        .as_ref()
        .map(|s| hex::encode(s.public_key))
        .expect("validated manifests are signed");
    let mut next = manifest.clone();
    next.provenance_chain.push(ActionRecord {
        timestamp: entry.added_at,
        action: Action::Other,
        actor: format!(
            "ed25519:{} (prior signer ed25519:{})",
            hex::encode(signing_key.verifying_key().to_bytes()),
            prior_signer
        ),
        note: EMBED_NOTE.into(),
    });
    next.dataset_entries.push(entry);
    Ok(sign_manifest(&next, signing_key)?)
}

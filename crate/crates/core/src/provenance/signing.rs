//! Ed25519 keys and manifest signatures.

use std::path::Path;

use chrono::{TimeDelta, Utc};
use ed25519_dalek::{Signer, SigningKey, Verifier, VerifyingKey};
use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::manifest::{ProvenanceManifest, SignatureBlock, SignatureScheme};

pub use ed25519_dalek::SigningKey as PrivateKey;

/// Allowed clock skew when checking that history is not in the future.
const FUTURE_SKEW: TimeDelta = TimeDelta::minutes(5);

#[derive(Debug, Error)]
pub enum KeyError {
    #[error("cannot read key file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("key must be 32 bytes of lowercase hex: {0}")]
    Format(String),
    #[error("provenance record at {0} is in the future")]
    FutureTimestamp(String),
}

/// Parses a 32-byte Ed25519 secret seed from hex text.
pub fn parse_signing_key(text: &str) -> Result<SigningKey, KeyError> {
    let mut seed = [0u8; 32];
    hex::decode_to_slice(text.trim(), &mut seed).map_err(|e| KeyError::Format(e.to_string()))?;
    Ok(SigningKey::from_bytes(&seed))
}

pub fn read_signing_key(path: &Path) -> Result<SigningKey, KeyError> {
    let text = std::fs::read_to_string(path).map_err(|source| KeyError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_signing_key(&text)
}

/// Hex text form accepted by [`parse_signing_key`].
pub fn encode_signing_key(key: &SigningKey) -> String {
    hex::encode(key.to_bytes())
}

/// Deterministic key for fixtures: ChaCha20 seeded from `seed` and a role label.
pub fn derive_signing_key(seed: u64, label: &str) -> SigningKey {
    let mut material = Sha256::new();
    material.update(seed.to_le_bytes());
    material.update(label.as_bytes());
    let mut rng = ChaCha20Rng::from_seed(material.finalize().into());
    let mut secret = [0u8; 32];
    rng.fill_bytes(&mut secret);
    SigningKey::from_bytes(&secret)
}

/// Returns a copy of `manifest` carrying a fresh signature by `key`.
pub fn sign_manifest(manifest: &ProvenanceManifest, key: &SigningKey) -> Result<ProvenanceManifest, KeyError> {
    let horizon = Utc::now() + FUTURE_SKEW;
    if let Some(rec) = manifest.provenance_chain.iter().find(|r| r.timestamp > horizon) {
        return Err(KeyError::FutureTimestamp(rec.timestamp.to_rfc3339()));
    }
    let mut signed = manifest.clone();
    signed.signature = None;
    let signature = key.sign(&signed.signing_bytes());
    signed.signature = Some(SignatureBlock {
        scheme: SignatureScheme::Ed25519,
        public_key: key.verifying_key().to_bytes(),
        signature: signature.to_bytes(),
    });
    Ok(signed)
}

/// True iff the manifest carries a signature that verifies over its canonical bytes.
pub fn verify_signature(manifest: &ProvenanceManifest) -> bool {
    let Some(block) = &manifest.signature else {
        return false;
    };
    let Ok(public) = VerifyingKey::from_bytes(&block.public_key) else {
        return false;
    };
    let signature = ed25519_dalek::Signature::from_bytes(&block.signature);
    public.verify(&manifest.signing_bytes(), &signature).is_ok()
}

/// Like [`verify_signature`] but also requires the signer to be `expected`.
pub fn verify_signature_by(manifest: &ProvenanceManifest, expected: &VerifyingKey) -> bool {
    manifest
        .signature
        .as_ref()
        .is_some_and(|b| b.public_key == expected.to_bytes())
        && verify_signature(manifest)
}

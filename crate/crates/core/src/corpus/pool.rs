//! Random candidate points for admission-check experiments.
//!
//! A pool mixes points that pass the admission check with points that fail
//! it in every way the check distinguishes.

use std::path::{Path, PathBuf};

use chrono::Duration;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::{
    author_key, creator_key, epoch, fixture_policy, io_err, point_id, prepare_output, write, write_point, FixtureError,
    PointSpec, AUTHOR_KEY_FILE, KEYS_DIR,
};
use crate::assess::POLICY_FILE;
use crate::criteria::{LicenseId, UseTag};
use crate::evidence::snapshot::FILES_DIR;
use crate::evidence::CARD_FILE;
use crate::provenance::signing::encode_signing_key;
use crate::provenance::{sidecar_path, write_sidecar, Consent, MediaKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CandidateKind {
    Clean,
    CleanWithAllowedUses,
    ConsentDenied,
    NonCommercial,
    UnspecifiedLicense,
    UnspecifiedConsent,
    MissingManifest,
    Tampered,
    Unsigned,
}

impl CandidateKind {
    const ALL: [CandidateKind; 9] = [
        CandidateKind::Clean,
        CandidateKind::CleanWithAllowedUses,
        CandidateKind::ConsentDenied,
        CandidateKind::NonCommercial,
        CandidateKind::UnspecifiedLicense,
        CandidateKind::UnspecifiedConsent,
        CandidateKind::MissingManifest,
        CandidateKind::Tampered,
        CandidateKind::Unsigned,
    ];

    /// Whether the admission check should accept this candidate.
    pub fn admissible(self) -> bool {
        matches!(self, CandidateKind::Clean | CandidateKind::CleanWithAllowedUses)
    }
}

#[derive(Debug, Clone)]
pub struct Candidate {
    pub id: String,
    pub path: PathBuf,
    pub kind: CandidateKind,
}

#[derive(Debug, Clone)]
pub struct CandidatePool {
    pub root: PathBuf,
    pub dataset_source: String,
    pub author_key_path: PathBuf,
    pub policy_path: PathBuf,
    pub candidates: Vec<Candidate>,
}

/// Writes `count` random candidates under `out/files`. The first one is always clean.
pub fn build_candidate_pool(out: &Path, seed: u64, count: usize) -> Result<CandidatePool, FixtureError> {
    if count == 0 {
        return Err(FixtureError::Profile(
            "a candidate pool needs at least one point".into(),
        ));
    }
    prepare_output(out)?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed ^ 0x5EED_0FC0DE);
    let creator = creator_key(seed);
    let files = out.join(FILES_DIR);
    let source = format!("https://datasets.example.org/pool-{seed:x}");
    let mut candidates = Vec::with_capacity(count);
    for i in 0..count {
        let kind = if i == 0 || rng.gen_bool(0.5) {
            if rng.gen_bool(0.5) {
                CandidateKind::Clean
            } else {
                CandidateKind::CleanWithAllowedUses
            }
        } else {
            CandidateKind::ALL[rng.gen_range(2..CandidateKind::ALL.len())]
        };
        let license = if rng.gen_bool(0.5) {
            LicenseId::Cc0
        } else {
            LicenseId::CcBy4
        };
        let spec = match kind {
            CandidateKind::Clean
            | CandidateKind::MissingManifest
            | CandidateKind::Tampered
            | CandidateKind::Unsigned => PointSpec {
                license,
                consent: Consent::Granted,
                allowed_uses: None,
            },
            CandidateKind::CleanWithAllowedUses => PointSpec {
                license,
                consent: Consent::Granted,
                allowed_uses: Some(UseTag::ALL.to_vec()),
            },
            CandidateKind::ConsentDenied => PointSpec {
                license,
                consent: Consent::Denied,
                allowed_uses: None,
            },
            CandidateKind::NonCommercial => PointSpec {
                license: LicenseId::CcByNc4,
                consent: Consent::Granted,
                allowed_uses: None,
            },
            CandidateKind::UnspecifiedLicense => PointSpec {
                license: LicenseId::Unspecified,
                consent: Consent::Granted,
                allowed_uses: None,
            },
            CandidateKind::UnspecifiedConsent => PointSpec {
                license,
                consent: Consent::Unspecified,
                allowed_uses: None,
            },
        };
        let media = [MediaKind::Image, MediaKind::Audio, MediaKind::Video][rng.gen_range(0..3)];
        let id = point_id(media, i);
        let created = epoch() + Duration::seconds(i as i64);
        let (asset, manifest) = write_point(&files, &id, media, rng.gen(), &spec, created, &creator)?;
        let path = asset.path().expect("file asset").to_path_buf();
        match kind {
            CandidateKind::MissingManifest => {
                let side = sidecar_path(&path);
                std::fs::remove_file(&side).map_err(io_err(&side))?;
            }
            CandidateKind::Tampered => {
                let mut bytes = std::fs::read(&path).map_err(io_err(&path))?;
                let at = rng.gen_range(0..bytes.len());
                bytes[at] ^= 0xFF;
                std::fs::write(&path, bytes).map_err(io_err(&path))?;
            }
            CandidateKind::Unsigned => {
                let mut unsigned = manifest;
                unsigned.signature = None;
                write_sidecar(&path, &unsigned).map_err(io_err(&path))?;
            }
            _ => {}
        }
        candidates.push(Candidate { id, path, kind });
    }

    let card = serde_json::json!({
        "platform": "local",
        "identifier": source,
        "dataset_source": source,
        "metadata": {},
    });
    write(
        &out.join(CARD_FILE),
        format!("{}\n", serde_json::to_string_pretty(&card).expect("card")),
    )?;
    let policy_path = out.join(POLICY_FILE);
    write(
        &policy_path,
        format!("{}\n", serde_json::to_string_pretty(&fixture_policy()).expect("policy")),
    )?;
    let author_key_path = out.join(KEYS_DIR).join(AUTHOR_KEY_FILE);
    write(&author_key_path, format!("{}\n", encode_signing_key(&author_key(seed))))?;
    Ok(CandidatePool {
        root: out.to_path_buf(),
        dataset_source: source,
        author_key_path,
        policy_path,
        candidates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::criteria::assess_datapoint;
    use crate::provenance::{AssetRef, DatasetEntry};

    #[test]
    fn admissibility_matches_the_check() {
        let dir = tempfile::tempdir().unwrap();
        let pool = build_candidate_pool(&dir.path().join("pool"), 3, 40).unwrap();
        assert!(pool.candidates[0].kind.admissible());
        let entry = DatasetEntry::new(pool.dataset_source.clone(), super::super::fixture_retention(), epoch());
        for c in &pool.candidates {
            let a = assess_datapoint(&AssetRef::from_path(&c.path).unwrap(), &fixture_policy(), Some(&entry)).unwrap();
            assert_eq!(a.compliant, c.kind.admissible(), "{:?}: {:?}", c.kind, a.reasons);
        }
    }
}

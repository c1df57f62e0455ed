//! Deterministic fixture datasets with a chosen set of satisfied criteria.
//!
//! A fixture is a snapshot directory (see [`crate::evidence`]) whose points are
//! tiny media stubs with signed sidecar manifests. Each violated criterion is
//! realized by a concrete defect:
//!
//! | criterion | satisfied by | violated by |
//! |-----------|--------------|-------------|
//! | C1 | card key, README section, pipeline scripts | none of these |
//! | C2 | compatible licenses only | one CC-BY-NC-4.0 point under a commercial policy |
//! | C3 | no inconclusive points | one signed point with an unspecified license, not flagged |
//! | C4 | card key and README contact | neither |
//! | C5 | anchored trace log | no log |
//! | C6 | every manifest re-signed with a dataset entry | no entries embedded |
//!
//! On GitHub and custom-site layouts the dataset-level verdicts always need
//! review, so the fixture also ships the reviewer decisions that realize the
//! profile.

pub mod media;
pub mod pool;
pub mod random;

pub use pool::{build_candidate_pool, Candidate, CandidateKind, CandidatePool};
pub use random::random_manifest;

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Duration, TimeZone, Utc};
use ed25519_dalek::SigningKey;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

use crate::assess::POLICY_FILE;
use crate::criteria::{CriterionId, DatasetPolicy, FlagRecord, LicenseId, UseTag, FLAGS_FILE};
use crate::evidence::snapshot::FILES_DIR;
use crate::evidence::{
    DatasetRef, OverrideStatus, PlatformKind, ReviewOverride, CARD_FILE, KEY_OPT_OUT, KEY_REPRODUCIBILITY,
    KEY_TRACE_LOG, KEY_TRACE_LOG_HEAD, OVERRIDES_FILE,
};
use crate::provenance::signing::{derive_signing_key, encode_signing_key};
use crate::provenance::{
    compute_content_hash, embed_dataset_entry, sign_manifest, write_sidecar, Action, ActionRecord, AssetRef, Consent,
    DatasetEntry, EmbedError, IsoDuration, KeyError, MediaKind, ProvenanceManifest, RetentionPeriod, MANIFEST_VERSION,
};
use crate::tracelog::{ChangeKind, TraceError, TraceLog, TraceRecord, TRACE_LOG_FILE};

pub const MAX_POINTS: usize = 10_000;
pub const KEYS_DIR: &str = "fixture-keys";
pub const CREATOR_KEY_FILE: &str = "creator.key";
pub const AUTHOR_KEY_FILE: &str = "author.key";
pub const PRESETS: [&str; 4] = [
    "sod4sb-replica",
    "mscoco-replica",
    "randompeople-replica",
    "tiktok-replica",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixtureProfile {
    pub satisfied: BTreeSet<CriterionId>,
    pub point_count: usize,
    pub seed: u64,
    pub platform_layout: PlatformKind,
    pub media: MediaKind,
}

impl FixtureProfile {
    pub fn new(
        satisfied: impl IntoIterator<Item = CriterionId>,
        point_count: usize,
        seed: u64,
        platform: PlatformKind,
    ) -> Self {
        Self {
            satisfied: satisfied.into_iter().collect(),
            point_count,
            seed,
            platform_layout: platform,
            media: MediaKind::Image,
        }
    }

    /// The shipped replicas of the four published case studies.
    pub fn preset(name: &str) -> Option<Self> {
        use CriterionId::*;
        let p = match name {
            "sod4sb-replica" => Self::new([C1, C2, C3, C4], 100, 0x50D45B, PlatformKind::Github),
            "mscoco-replica" => Self::new([C1], 100, 0xC0C0, PlatformKind::CustomUrl),
            "randompeople-replica" => Self {
                media: MediaKind::Video,
                ..Self::new([C1, C2, C3, C4, C5], 100, 0x9E0_91E, PlatformKind::Huggingface)
            },
            "tiktok-replica" => Self {
                media: MediaKind::Video,
                ..Self::new([], 50, 0x717_70C, PlatformKind::Kaggle)
            },
            _ => return None,
        };
        Some(p)
    }

    /// Parses a comma-separated criterion list such as `C1,C4`; empty means none.
    pub fn parse_satisfied(spec: &str) -> Result<BTreeSet<CriterionId>, FixtureError> {
        spec.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse()
                    .map_err(|e: crate::criteria::UnknownCriterion| FixtureError::Profile(e.to_string()))
            })
            .collect()
    }

    fn has(&self, c: CriterionId) -> bool {
        self.satisfied.contains(&c)
    }

    /// Dataset name used in identifiers.
    pub fn name(&self) -> String {
        let letters: String = self
            .satisfied
            .iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join("-");
        let set = if letters.is_empty() {
            "none".to_string()
        } else {
            letters.to_lowercase()
        };
        format!("fixture-{set}-{:x}", self.seed)
    }

    pub fn validate(&self) -> Result<(), FixtureError> {
        if self.point_count == 0 || self.point_count > MAX_POINTS {
            return Err(FixtureError::Profile(format!(
                "point_count must be between 1 and {MAX_POINTS}, got {}",
                self.point_count
            )));
        }
        let defects = usize::from(!self.has(CriterionId::C2)) + usize::from(!self.has(CriterionId::C3));
        if defects > 0 && self.point_count < defects + 1 {
            return Err(FixtureError::Profile(format!(
                "{} points cannot hold {defects} defect points and a clean one",
                self.point_count
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum FixtureError {
    #[error("refusing to write into non-empty directory {0}")]
    NotEmpty(PathBuf),
    #[error("invalid fixture profile: {0}")]
    Profile(String),
    #[error("fixture I/O error at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Key(#[from] KeyError),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error("no data point {0} in the snapshot")]
    UnknownAsset(String),
    #[error("byte index {index} out of range for {asset_id} ({size} bytes)")]
    OutOfRange {
        asset_id: String,
        index: usize,
        size: usize,
    },
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> FixtureError + '_ {
    move |source| FixtureError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub(crate) fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), FixtureError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    std::fs::write(path, bytes).map_err(io_err(path))
}

/// Creates `out` if needed and refuses to touch it when it holds anything.
pub(crate) fn prepare_output(out: &Path) -> Result<(), FixtureError> {
    if out.exists() {
        let mut entries = std::fs::read_dir(out).map_err(io_err(out))?;
        if entries.next().is_some() {
            return Err(FixtureError::NotEmpty(out.to_path_buf()));
        }
    }
    std::fs::create_dir_all(out).map_err(io_err(out))
}

/// Timestamps are fixed so a fixture is a pure function of its profile.
pub(crate) fn epoch() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2024, 3, 1, 9, 0, 0).unwrap()
}

/// The policy every generated fixture is rated under.
pub fn fixture_policy() -> DatasetPolicy {
    DatasetPolicy {
        dataset_license: LicenseId::CcBy4,
        intended_uses: vec![UseTag::AiTraining, UseTag::Commercial, UseTag::Redistribution],
        requires_explicit_consent: true,
        performs_derivatives: false,
    }
}

pub fn creator_key(seed: u64) -> SigningKey {
    derive_signing_key(seed, "creator")
}

pub fn author_key(seed: u64) -> SigningKey {
    derive_signing_key(seed, "dataset-author")
}

pub(crate) fn fixture_retention() -> RetentionPeriod {
    RetentionPeriod::Duration(IsoDuration {
        years: 5,
        ..IsoDuration::default()
    })
}

/// Where the generated fixture ended up and which points carry defects.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixtureSummary {
    pub root: PathBuf,
    pub dataset: DatasetRef,
    pub dataset_source: String,
    /// Point ids, sorted.
    pub points: Vec<String>,
    pub incompatible_point: Option<String>,
    pub unflagged_point: Option<String>,
}

fn identity(profile: &FixtureProfile) -> (DatasetRef, String) {
    let name = profile.name();
    let id = match profile.platform_layout {
        PlatformKind::CustomUrl | PlatformKind::Local => format!("https://datasets.example.org/{name}"),
        _ => format!("crs-fixtures/{name}"),
    };
    let dataset = DatasetRef {
        platform: profile.platform_layout,
        identifier: id,
    };
    let source = match profile.platform_layout {
        PlatformKind::Local => dataset.identifier.clone(),
        _ => dataset.default_source(),
    };
    (dataset, source)
}

pub(crate) struct PointSpec {
    pub license: LicenseId,
    pub consent: Consent,
    pub allowed_uses: Option<Vec<UseTag>>,
}

/// Writes one media stub and its manifest signed by the creator key.
pub(crate) fn write_point(
    files: &Path,
    id: &str,
    media: MediaKind,
    shade: u8,
    spec: &PointSpec,
    created: DateTime<Utc>,
    creator: &SigningKey,
) -> Result<(AssetRef, ProvenanceManifest), FixtureError> {
    let (bytes, _) = media::stub(media, id, shade);
    let path = files.join(id);
    write(&path, &bytes)?;
    let asset = AssetRef::from_path(&path).map_err(io_err(&path))?;
    let manifest = ProvenanceManifest {
        manifest_version: MANIFEST_VERSION.into(),
        asset_binding: compute_content_hash(&asset).map_err(io_err(&path))?,
        creator: format!("contributor-{:04}", shade as usize + id.len()),
        license: spec.license.clone(),
        ai_training_consent: spec.consent,
        allowed_uses: spec.allowed_uses.clone(),
        provenance_chain: vec![ActionRecord {
            timestamp: created,
            action: Action::Created,
            actor: format!("ed25519:{}", hex::encode(creator.verifying_key().to_bytes())),
            note: "captured by contributor".into(),
        }],
        dataset_entries: Vec::new(),
        signature: None,
    };
    let signed = sign_manifest(&manifest, creator)?;
    write_sidecar(&path, &signed).map_err(io_err(&path))?;
    Ok((asset, signed))
}

pub(crate) fn point_id(media: MediaKind, index: usize) -> String {
    let (_, ext) = media::stub(media, "", 0);
    let dir = match media {
        MediaKind::Video => "videos/clip",
        MediaKind::Audio => "audio/rec",
        MediaKind::Image | MediaKind::Other => "images/img",
    };
    format!("{dir}_{index:05}.{ext}")
}

fn readme(profile: &FixtureProfile, dataset: &DatasetRef) -> String {
    let kind = match profile.media {
        MediaKind::Video => "video",
        MediaKind::Audio => "audio",
        _ => "image",
    };
    let mut text = format!(
        "# {}\n\nSynthetic {kind} fixture with {} data points for compliance-rating tests.\n\
         Distributed under CC-BY-4.0.\n",
        dataset.identifier, profile.point_count
    );
    if profile.has(CriterionId::C1) {
        text.push_str(
            "\n## Reproduction\n\nItems were collected from consenting contributors, filtered for exact \
             duplicates and pre-processed with the scripts in files/pipeline/. Run \
             `python files/pipeline/collect.py` and then `python files/pipeline/preprocess.py` to \
             reproduce the release.\n",
        );
    }
    if profile.has(CriterionId::C4) {
        text.push_str(
            "\n## Opt-out\n\nCreators can opt out at any time. To request removal of your data, \
             email optout@example.org.\n",
        );
    }
    if profile.has(CriterionId::C5) {
        text.push_str(&format!(
            "\n## Change log\n\nEvery addition and deletion is recorded as a dated, hash-chained entry \
             in {TRACE_LOG_FILE}.\n"
        ));
    }
    text
}

const COLLECT_PY: &str = "\"\"\"Copy contributed items into raw/ and keep their metadata.\"\"\"\n\
import json\nimport pathlib\nimport shutil\n\n\
def main(inbox=\"inbox\", raw=\"raw\"):\n    pathlib.Path(raw).mkdir(exist_ok=True)\n\
    for item in sorted(pathlib.Path(inbox).glob(\"*\")):\n        shutil.copy(item, raw)\n\n\
if __name__ == \"__main__\":\n    main()\n";

const PREPROCESS_PY: &str = "\"\"\"Drop exact duplicates and normalize file names.\"\"\"\n\
import hashlib\nimport pathlib\n\n\
def main(raw=\"raw\", out=\"files\"):\n    seen = set()\n\
    for item in sorted(pathlib.Path(raw).glob(\"*\")):\n        digest = hashlib.sha256(item.read_bytes()).hexdigest()\n\
        if digest not in seen:\n            seen.add(digest)\n\n\
if __name__ == \"__main__\":\n    main()\n";

fn override_for(c: CriterionId, satisfied: bool, at: DateTime<Utc>) -> ReviewOverride {
    let justification = match (c, satisfied) {
        (CriterionId::C1, true) => "README documents collection, de-duplication and processing; scripts are published",
        (CriterionId::C1, false) => "no description of how the items were obtained or processed",
        (CriterionId::C4, true) => "README gives a working address for removal requests",
        (CriterionId::C4, false) => "no way for creators to ask for their items to be removed",
        (CriterionId::C5, true) => "hash-chained trace log verified and consistent with the release",
        (CriterionId::C5, false) => "no dated record of changes is kept",
        _ => unreachable!("only dataset-level criteria are reviewed"),
    };
    ReviewOverride {
        criterion: c,
        status: if satisfied {
            OverrideStatus::Satisfied
        } else {
            OverrideStatus::Violated
        },
        justification: justification.into(),
        reviewer: "fixture-reviewer".into(),
        decided_at: at,
    }
}

/// Builds the fixture for `profile` in `out`, which must be empty or absent.
pub fn build_fixture(profile: &FixtureProfile, out: &Path) -> Result<FixtureSummary, FixtureError> {
    profile.validate()?;
    prepare_output(out)?;
    let mut rng = ChaCha20Rng::seed_from_u64(profile.seed);
    let creator = creator_key(profile.seed);
    let author = author_key(profile.seed);
    let (dataset, source) = identity(profile);
    let files = out.join(FILES_DIR);
    let t0 = epoch();
    let release = t0 + Duration::days(30);

    let n = profile.point_count;
    let ids: Vec<String> = (0..n).map(|i| point_id(profile.media, i)).collect();
    let mut slots: Vec<usize> = (0..n).collect();
    slots.shuffle(&mut rng);
    let mut defects = slots.into_iter();
    let incompatible = (!profile.has(CriterionId::C2)).then(|| defects.next().expect("validated"));
    let unflagged = (!profile.has(CriterionId::C3)).then(|| defects.next().expect("validated"));

    for (i, id) in ids.iter().enumerate() {
        let spec = if Some(i) == incompatible {
            PointSpec {
                license: LicenseId::CcByNc4,
                consent: Consent::Granted,
                allowed_uses: None,
            }
        } else if Some(i) == unflagged {
            PointSpec {
                license: LicenseId::Unspecified,
                consent: Consent::Granted,
                allowed_uses: None,
            }
        } else {
            let license = if rng.gen_bool(0.5) {
                LicenseId::Cc0
            } else {
                LicenseId::CcBy4
            };
            PointSpec {
                license,
                consent: Consent::Granted,
                allowed_uses: None,
            }
        };
        let shade = rng.gen();
        let created = t0 + Duration::seconds(i as i64);
        let (asset, manifest) = write_point(&files, id, profile.media, shade, &spec, created, &creator)?;
        if profile.has(CriterionId::C6) {
            let entry = DatasetEntry::new(source.clone(), fixture_retention(), release);
            let embedded = embed_dataset_entry(&asset, &manifest, entry, &author)?;
            write_sidecar(asset.path().expect("file asset"), &embedded).map_err(io_err(out))?;
        }
    }

    write(&out.join(FLAGS_FILE), "")?;

    let mut metadata = serde_json::Map::new();
    metadata.insert("license".into(), "cc-by-4.0".into());
    metadata.insert("pretty_name".into(), profile.name().into());
    if profile.has(CriterionId::C1) {
        metadata.insert(
            KEY_REPRODUCIBILITY.into(),
            "README.md#reproduction; scripts in files/pipeline/".into(),
        );
        write(&files.join("pipeline/collect.py"), COLLECT_PY)?;
        write(&files.join("pipeline/preprocess.py"), PREPROCESS_PY)?;
    }
    if profile.has(CriterionId::C4) {
        metadata.insert(KEY_OPT_OUT.into(), "mailto:optout@example.org".into());
    }
    if profile.has(CriterionId::C5) {
        let mut log = TraceLog::new(TRACE_LOG_FILE);
        log.append(TraceRecord {
            recorded_at: release,
            change_kind: ChangeKind::PointAdded,
            affected_points: ids.clone(),
            description: "initial collection".into(),
            actor: "dataset-author".into(),
        })?;
        log.append(TraceRecord {
            recorded_at: release + Duration::hours(1),
            change_kind: ChangeKind::VersionReleased,
            affected_points: Vec::new(),
            description: "release 1.0.0".into(),
            actor: "dataset-author".into(),
        })?;
        write(&out.join(TRACE_LOG_FILE), log.to_jsonl())?;
        metadata.insert(KEY_TRACE_LOG.into(), TRACE_LOG_FILE.into());
        metadata.insert(KEY_TRACE_LOG_HEAD.into(), hex::encode(log.head()).into());
    }
    let card = serde_json::json!({
        "platform": profile.platform_layout,
        "identifier": dataset.identifier,
        "dataset_source": source,
        "metadata": metadata,
    });
    write(
        &out.join(CARD_FILE),
        format!("{}\n", serde_json::to_string_pretty(&card).expect("card")),
    )?;
    write(&out.join("README.md"), readme(profile, &dataset))?;
    write(
        &out.join(POLICY_FILE),
        format!("{}\n", serde_json::to_string_pretty(&fixture_policy()).expect("policy")),
    )?;

    if profile.platform_layout.requires_review() {
        let at = release + Duration::days(10);
        let decisions: Vec<ReviewOverride> = CriterionId::DATASET_LEVEL
            .iter()
            .map(|&c| override_for(c, profile.has(c), at))
            .collect();
        write(
            &out.join(OVERRIDES_FILE),
            format!("{}\n", serde_json::to_string_pretty(&decisions).expect("overrides")),
        )?;
    }

    let keys = out.join(KEYS_DIR);
    write(
        &keys.join(CREATOR_KEY_FILE),
        format!("{}\n", encode_signing_key(&creator)),
    )?;
    write(
        &keys.join(AUTHOR_KEY_FILE),
        format!("{}\n", encode_signing_key(&author)),
    )?;

    let mut points = ids.clone();
    points.sort();
    Ok(FixtureSummary {
        root: out.to_path_buf(),
        dataset,
        dataset_source: source,
        points,
        incompatible_point: incompatible.map(|i| ids[i].clone()),
        unflagged_point: unflagged.map(|i| ids[i].clone()),
    })
}

/// Flips one byte of a data point; its manifest is left untouched.
pub fn tamper(snapshot: &Path, asset_id: &str, byte_index: usize) -> Result<(), FixtureError> {
    let base = if snapshot.join(FILES_DIR).is_dir() {
        snapshot.join(FILES_DIR)
    } else {
        snapshot.to_path_buf()
    };
    let rel = Path::new(asset_id);
    if asset_id.is_empty() || !rel.components().all(|c| matches!(c, std::path::Component::Normal(_))) {
        return Err(FixtureError::UnknownAsset(asset_id.to_string()));
    }
    let path = base.join(rel);
    if !path.is_file() {
        return Err(FixtureError::UnknownAsset(asset_id.to_string()));
    }
    let mut bytes = std::fs::read(&path).map_err(io_err(&path))?;
    let size = bytes.len();
    let byte = bytes.get_mut(byte_index).ok_or_else(|| FixtureError::OutOfRange {
        asset_id: asset_id.to_string(),
        index: byte_index,
        size,
    })?;
    *byte ^= 0xFF;
    std::fs::write(&path, bytes).map_err(io_err(&path))
}

/// Appends a flag record for each id (used by tests and examples).
pub fn flag_points(snapshot: &Path, ids: &[String], reason: &str) -> Result<(), FixtureError> {
    let path = snapshot.join(FLAGS_FILE);
    let mut text = String::new();
    for id in ids {
        let rec = FlagRecord {
            asset_id: id.clone(),
            reason: reason.to_string(),
            flagged_at: epoch() + Duration::days(31),
        };
        let _ = writeln!(
            text,
            "{}",
            crate::canonical::to_canonical_string(&rec).expect("flag record")
        );
    }
    let mut f = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(&path)
        .map_err(io_err(&path))?;
    std::io::Write::write_all(&mut f, text.as_bytes()).map_err(io_err(&path))
}

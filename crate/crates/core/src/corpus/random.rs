//! Seeded random manifests covering every field shape.

use chrono::{DateTime, Duration, NaiveDate, TimeZone, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::criteria::{LicenseId, UseTag};
use crate::provenance::signing::derive_signing_key;
use crate::provenance::{
    sign_manifest, Action, ActionRecord, Consent, ContentHash, DatasetEntry, IsoDuration, ProvenanceManifest,
    RetentionPeriod,
};

const ALPHABET: &[&str] = &[
    "a", "Z", "0", " ", "-", "_", "/", ":", "@", ".", "\"", "\\", "\n", "\t", "\u{1}", "\u{7f}", "é", "ß", "中", "😀",
    "\u{2028}", "<", ">", "&", "'",
];

fn text(rng: &mut ChaCha20Rng, max: usize) -> String {
    let len = rng.gen_range(0..=max);
    (0..len).map(|_| ALPHABET[rng.gen_range(0..ALPHABET.len())]).collect()
}

fn non_blank(rng: &mut ChaCha20Rng, max: usize) -> String {
    format!("x{}", text(rng, max))
}

fn instant(rng: &mut ChaCha20Rng, after: DateTime<Utc>) -> DateTime<Utc> {
    let step = Duration::seconds(rng.gen_range(0..86_400 * 400));
    let nanos = match rng.gen_range(0..3) {
        0 => 0,
        1 => rng.gen_range(0..1000) * 1_000_000,
        _ => rng.gen_range(0..1_000_000_000),
    };
    after + step + Duration::nanoseconds(nanos)
}

fn retention(rng: &mut ChaCha20Rng) -> RetentionPeriod {
    if rng.gen_bool(0.3) {
        let day = NaiveDate::from_ymd_opt(2025, 1, 1).unwrap() + Duration::days(rng.gen_range(0..5000));
        return RetentionPeriod::Until(day);
    }
    let mut pick = |p: f64, hi: u32| if rng.gen_bool(p) { rng.gen_range(1..=hi) } else { 0 };
    RetentionPeriod::Duration(IsoDuration {
        years: pick(0.5, 20),
        months: pick(0.3, 11),
        weeks: pick(0.2, 8),
        days: pick(0.3, 400),
        hours: pick(0.2, 23),
        minutes: pick(0.1, 59),
        seconds: pick(0.1, 59),
    })
}

/// A structurally valid manifest drawn from `seed`. About half are signed.
pub fn random_manifest(seed: u64) -> ProvenanceManifest {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut digest = [0u8; 32];
    rng.fill(&mut digest);
    let license = match rng.gen_range(0..=LicenseId::KNOWN.len()) {
        i if i < LicenseId::KNOWN.len() => LicenseId::KNOWN[i].clone(),
        _ => LicenseId::Custom(format!("LicenseRef-{}", non_blank(&mut rng, 12))),
    };
    let consent = [Consent::Granted, Consent::Denied, Consent::Unspecified][rng.gen_range(0..3)];
    let allowed_uses = rng.gen_bool(0.5).then(|| {
        UseTag::ALL
            .iter()
            .copied()
            .filter(|_| rng.gen_bool(0.5))
            .collect::<Vec<_>>()
    });
    let mut t = Utc.with_ymd_and_hms(2015, 1, 1, 0, 0, 0).unwrap();
    let actions = [
        Action::Created,
        Action::Edited,
        Action::Transcoded,
        Action::Annotated,
        Action::Other,
    ];
    let provenance_chain = (0..rng.gen_range(1..=5))
        .map(|_| {
            t = instant(&mut rng, t);
            ActionRecord {
                timestamp: t,
                action: actions[rng.gen_range(0..actions.len())],
                actor: text(&mut rng, 16),
                note: text(&mut rng, 24),
            }
        })
        .collect();
    let dataset_entries = (0..rng.gen_range(0..=3))
        .map(|_| {
            let source = format!("https://example.org/{}", non_blank(&mut rng, 10));
            let added_at = instant(&mut rng, t);
            DatasetEntry::new(source, retention(&mut rng), added_at)
        })
        .collect();
    let manifest = ProvenanceManifest {
        manifest_version: format!(
            "{}.{}.{}",
            rng.gen_range(0..3),
            rng.gen_range(0..20),
            rng.gen_range(0..100)
        ),
        asset_binding: ContentHash {
            algorithm: crate::provenance::HashAlgorithm::Sha256,
            digest,
        },
        creator: text(&mut rng, 20),
        license,
        ai_training_consent: consent,
        allowed_uses,
        provenance_chain,
        dataset_entries,
        signature: None,
    };
    if rng.gen_bool(0.5) {
        sign_manifest(&manifest, &derive_signing_key(seed, "random-manifest")).expect("timestamps are in the past")
    } else {
        manifest
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::provenance::{parse_manifest, serialize_manifest, verify_signature};

    #[test]
    fn deterministic_and_parseable() {
        for seed in 0..50 {
            let m = random_manifest(seed);
            assert_eq!(m, random_manifest(seed));
            let bytes = serialize_manifest(&m);
            assert_eq!(parse_manifest(&bytes).unwrap(), m);
            if m.signature.is_some() {
                assert!(verify_signature(&m));
            }
        }
    }
}

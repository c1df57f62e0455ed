use std::collections::BTreeSet;
use std::path::Path;

use crs_core::assess::{rate_snapshot, RateOptions};
use crs_core::corpus::{build_fixture, flag_points, tamper, FixtureProfile, PRESETS};
use crs_core::criteria::FLAGS_FILE;
use crs_core::evidence::{append_override, OverrideStatus, ReviewOverride, KEY_TRACE_LOG, KEY_TRACE_LOG_HEAD};
use crs_core::provenance::{inspect_provenance, AssetRef, ValidationStatus};
use crs_core::{CriterionId, CriterionStatus, Letter, PlatformKind};
use walkdir::WalkDir;

fn subset(mask: u8) -> BTreeSet<CriterionId> {
    CriterionId::ALL
        .into_iter()
        .filter(|c| mask & (1 << c.index()) != 0)
        .collect()
}

fn satisfied_set(root: &Path) -> BTreeSet<CriterionId> {
    let rating = rate_snapshot(root, &RateOptions::default()).unwrap();
    rating.assessment.check().unwrap();
    rating.assessment.satisfied().into_iter().collect()
}

#[test]
fn every_profile_rates_as_requested() {
    let dir = tempfile::tempdir().unwrap();
    for mask in 0u8..64 {
        let wanted = subset(mask);
        let platform = PlatformKind::ALL[mask as usize % PlatformKind::ALL.len()];
        let profile = FixtureProfile::new(wanted.clone(), 20, 1000 + mask as u64, platform);
        let root = dir.path().join(format!("p{mask}"));
        build_fixture(&profile, &root).unwrap();
        assert_eq!(satisfied_set(&root), wanted, "profile {mask:06b} on {platform}");
    }
}

#[test]
fn every_profile_on_hub_and_github_layouts() {
    let dir = tempfile::tempdir().unwrap();
    for platform in [PlatformKind::Huggingface, PlatformKind::Github] {
        for mask in 0u8..64 {
            let wanted = subset(mask);
            let profile = FixtureProfile::new(wanted.clone(), 20, mask as u64, platform);
            let root = dir.path().join(format!("{platform}-{mask}"));
            build_fixture(&profile, &root).unwrap();
            assert_eq!(satisfied_set(&root), wanted, "profile {mask:06b} on {platform}");
        }
    }
}

fn snapshot_bytes(root: &Path) -> Vec<(String, Vec<u8>)> {
    WalkDir::new(root)
        .sort_by_file_name()
        .into_iter()
        .map(|e| e.unwrap())
        .filter(|e| e.file_type().is_file())
        .map(|e| {
            (
                e.path().strip_prefix(root).unwrap().display().to_string(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect()
}

#[test]
fn same_profile_same_bytes() {
    let dir = tempfile::tempdir().unwrap();
    for name in PRESETS {
        let p = FixtureProfile::preset(name).unwrap();
        build_fixture(&p, &dir.path().join(format!("{name}-a"))).unwrap();
        build_fixture(&p, &dir.path().join(format!("{name}-b"))).unwrap();
        assert_eq!(
            snapshot_bytes(&dir.path().join(format!("{name}-a"))),
            snapshot_bytes(&dir.path().join(format!("{name}-b")))
        );
    }
    let a = FixtureProfile::new([CriterionId::C1], 10, 1, PlatformKind::Kaggle);
    let b = FixtureProfile { seed: 2, ..a.clone() };
    build_fixture(&a, &dir.path().join("s1")).unwrap();
    build_fixture(&b, &dir.path().join("s2")).unwrap();
    assert_ne!(
        snapshot_bytes(&dir.path().join("s1")),
        snapshot_bytes(&dir.path().join("s2"))
    );
}

#[test]
fn full_profile_rates_a_and_tiktok_rates_g() {
    let dir = tempfile::tempdir().unwrap();
    let all = FixtureProfile::new(CriterionId::ALL, 30, 5, PlatformKind::Huggingface);
    build_fixture(&all, &dir.path().join("all")).unwrap();
    let r = rate_snapshot(&dir.path().join("all"), &RateOptions::default()).unwrap();
    assert_eq!(r.assessment.score.letter, Letter::A);

    build_fixture(
        &FixtureProfile::preset("tiktok-replica").unwrap(),
        &dir.path().join("tt"),
    )
    .unwrap();
    let r = rate_snapshot(&dir.path().join("tt"), &RateOptions::default()).unwrap();
    assert_eq!(r.assessment.score.letter, Letter::G);
    assert!(r
        .assessment
        .per_criterion
        .iter()
        .all(|c| c.status == CriterionStatus::Violated));
}

#[test]
fn defects_are_listed() {
    let dir = tempfile::tempdir().unwrap();
    let p = FixtureProfile::new(
        [CriterionId::C1, CriterionId::C4, CriterionId::C5, CriterionId::C6],
        25,
        11,
        PlatformKind::Kaggle,
    );
    let s = build_fixture(&p, &dir.path().join("fx")).unwrap();
    let r = rate_snapshot(&s.root, &RateOptions::default()).unwrap();
    let c2 = r.assessment.result(CriterionId::C2);
    assert_eq!(c2.violating_points, vec![s.incompatible_point.clone().unwrap()]);
    let c3 = r.assessment.result(CriterionId::C3);
    assert_eq!(c3.violating_points, vec![s.unflagged_point.clone().unwrap()]);
    assert_eq!(r.assessment.result(CriterionId::C6).status, CriterionStatus::Satisfied);

    // Flagging the inconclusive point satisfies C3 and leaves C2 alone.
    flag_points(&s.root, &[s.unflagged_point.clone().unwrap()], "license unspecified").unwrap();
    let r = rate_snapshot(&s.root, &RateOptions::default()).unwrap();
    assert_eq!(r.assessment.result(CriterionId::C3).status, CriterionStatus::Satisfied);
    assert_eq!(r.assessment.result(CriterionId::C2).status, CriterionStatus::Violated);
}

#[test]
fn tamper_then_flag() {
    let dir = tempfile::tempdir().unwrap();
    let p = FixtureProfile::new(CriterionId::ALL, 12, 21, PlatformKind::Huggingface);
    let s = build_fixture(&p, &dir.path().join("fx")).unwrap();
    let victim = s.points[4].clone();
    let path = s.root.join("files").join(&victim);
    let len = std::fs::metadata(&path).unwrap().len() as usize;
    tamper(&s.root, &victim, 0).unwrap();
    assert_eq!(
        inspect_provenance(&AssetRef::from_path(&path).unwrap()).status(),
        ValidationStatus::Invalid
    );
    let r = rate_snapshot(&s.root, &RateOptions::default()).unwrap();
    assert_eq!(
        r.assessment.result(CriterionId::C3).violating_points,
        vec![victim.clone()]
    );
    assert_eq!(r.assessment.result(CriterionId::C2).status, CriterionStatus::Satisfied);

    flag_points(&s.root, std::slice::from_ref(&victim), "binding mismatch").unwrap();
    let r = rate_snapshot(&s.root, &RateOptions::default()).unwrap();
    assert_eq!(r.assessment.result(CriterionId::C3).status, CriterionStatus::Satisfied);
    assert_eq!(r.assessment.result(CriterionId::C2).status, CriterionStatus::Satisfied);

    // Last byte too: flip it twice more so only the final byte differs from the original.
    tamper(&s.root, &victim, 0).unwrap();
    tamper(&s.root, &victim, len - 1).unwrap();
    assert_eq!(
        inspect_provenance(&AssetRef::from_path(&path).unwrap()).status(),
        ValidationStatus::Invalid
    );
}

#[test]
fn randompeople_with_review_of_the_change_history() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().join("rp");
    build_fixture(&FixtureProfile::preset("randompeople-replica").unwrap(), &root).unwrap();

    // Drop the machine-readable log; the README still talks about a change log.
    std::fs::remove_file(root.join("CHANGES.crs.jsonl")).unwrap();
    let card_path = root.join("card.json");
    let mut card: serde_json::Value = serde_json::from_slice(&std::fs::read(&card_path).unwrap()).unwrap();
    let meta = card["metadata"].as_object_mut().unwrap();
    meta.remove(KEY_TRACE_LOG);
    meta.remove(KEY_TRACE_LOG_HEAD);
    std::fs::write(&card_path, serde_json::to_vec_pretty(&card).unwrap()).unwrap();
    std::fs::write(
        root.join("files/CHANGELOG.md"),
        "# Changelog\n\nRelease notes are kept here.\n",
    )
    .unwrap();

    let r = rate_snapshot(&root, &RateOptions::default()).unwrap();
    assert_eq!(
        r.assessment.result(CriterionId::C5).status,
        CriterionStatus::NeedsReview
    );
    assert_eq!(r.assessment.score.letter, Letter::C);

    append_override(
        &root.join("OVERRIDES.crs.json"),
        ReviewOverride {
            criterion: CriterionId::C5,
            status: OverrideStatus::Satisfied,
            justification: "changelog reviewed against the release history".into(),
            reviewer: "auditor".into(),
            decided_at: "2024-05-01T00:00:00Z".parse().unwrap(),
        },
    )
    .unwrap();
    let r = rate_snapshot(&root, &RateOptions::default()).unwrap();
    assert_eq!(r.assessment.result(CriterionId::C5).status, CriterionStatus::Satisfied);
    assert!(r.assessment.result(CriterionId::C5).review.is_some());
    assert_eq!(r.assessment.score.letter, Letter::B);
}

#[test]
fn flag_file_presence_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let p = FixtureProfile::new(CriterionId::ALL, 5, 2, PlatformKind::Local);
    let s = build_fixture(&p, &dir.path().join("fx")).unwrap();
    assert!(
        rate_snapshot(&s.root, &RateOptions::default())
            .unwrap()
            .assessment
            .flags_file_checked
    );
    std::fs::remove_file(s.root.join(FLAGS_FILE)).unwrap();
    assert!(
        !rate_snapshot(&s.root, &RateOptions::default())
            .unwrap()
            .assessment
            .flags_file_checked
    );
}

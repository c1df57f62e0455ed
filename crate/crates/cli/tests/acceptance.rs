//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
//! exits non-zero when any of them fails.

mod support;

use std::collections::BTreeSet;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use chrono::{TimeZone, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crs_core::corpus::{build_candidate_pool, build_fixture, random_manifest, tamper, FixtureProfile};
use crs_core::criteria::{check_license_compat, CompatValue};
use crs_core::provenance::{inspect_provenance, parse_manifest, serialize_manifest, sidecar_path, Consent};
use crs_core::tracelog::{validate_log_anchored, validate_log_bytes, ChangeKind, TraceLog, TraceRecord};
use crs_core::{
    compute_score, CriterionId, CriterionResult, CriterionStatus, DatasetPolicy, LicenseId, PlatformKind, UseTag,
    ValidationStatus,
};

use support::oracle::{self, Verdict};
use support::{code, crs, p, rate_json, stderr};

type Outcome = Result<String, String>;
type Check = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let checks: [Check; 7] = [
        ("1 replica fixtures rate C, F, B, G with matching rows", replicas),
        ("2 all 64 criterion subsets map to 6 - |S|", score_subsets),
        ("3 tampered assets are invalid and listed under C3", tamper_soundness),
        ("4 admitted points keep C2, C3 and C6 satisfied", admission_consistency),
        ("5 manifest round trip is byte-exact", round_trip),
        ("6 license matrix agrees with the brute-force oracle", license_matrix),
        ("7 trace log mutations are detected", trace_tamper),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        let started = Instant::now();
        let outcome = check();
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {name}: {detail} [{secs:.1}s]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {name}: {detail} [{secs:.1}s]");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn tempdir() -> Result<tempfile::TempDir, String> {
    tempfile::tempdir().map_err(|e| e.to_string())
}

fn replicas() -> Outcome {
    // Published case-study rows: C1..C6 and the letter.
    let table: [(&str, [bool; 6], &str); 4] = [
        ("sod4sb-replica", [true, true, true, true, false, false], "C"),
        ("mscoco-replica", [true, false, false, false, false, false], "F"),
        ("randompeople-replica", [true, true, true, true, true, false], "B"),
        ("tiktok-replica", [false, false, false, false, false, false], "G"),
    ];
    let started = Instant::now();
    let dir = tempdir()?;
    let mut letters = Vec::new();
    for (preset, row, letter) in table {
        let root = dir.path().join(preset);
        let out = crs(&["gen-fixtures", "--preset", preset, "--out", p(&root)]);
        ensure(code(&out) == 0, || format!("gen-fixtures {preset}: {}", stderr(&out)))?;
        let report = rate_json(&root, &[]);
        let got: Vec<bool> = report
            .assessment
            .per_criterion
            .iter()
            .map(|r| r.is_satisfied())
            .collect();
        ensure(got == row, || format!("{preset}: pattern {got:?}, expected {row:?}"))?;
        let got_letter = report.assessment.score.letter.to_string();
        ensure(got_letter == letter, || {
            format!("{preset}: rated {got_letter}, expected {letter}")
        })?;
        letters.push(got_letter);
    }
    let elapsed = started.elapsed();
    ensure(elapsed < Duration::from_secs(30), || format!("took {elapsed:?}"))?;
    Ok(format!("{} in {:.1}s", letters.join(" "), elapsed.as_secs_f64()))
}

fn score_subsets() -> Outcome {
    const LETTERS: &str = "ABCDEFG";
    for mask in 0u32..64 {
        let results: Vec<CriterionResult> = CriterionId::ALL
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                let status = if mask & (1 << i) != 0 {
                    CriterionStatus::Satisfied
                } else {
                    CriterionStatus::Violated
                };
                CriterionResult::new(c, status, "synthetic")
            })
            .collect();
        let score = compute_score(&results).map_err(|e| e.to_string())?;
        let expected = LETTERS.as_bytes()[6 - mask.count_ones() as usize] as char;
        ensure(score.letter.as_char() == expected, || {
            format!("mask {mask:06b}: got {}, expected {expected}", score.letter)
        })?;
        ensure(u32::from(score.satisfied_count) == mask.count_ones(), || {
            format!("mask {mask:06b}: count")
        })?;
    }
    Ok("64/64 subsets exact".into())
}

fn tamper_soundness() -> Outcome {
    let dir = tempdir()?;
    let profile = FixtureProfile::new(CriterionId::ALL, 100, 0x7A3, PlatformKind::Local);
    let summary = build_fixture(&profile, &dir.path().join("clean")).map_err(|e| e.to_string())?;
    let root = &summary.root;
    let before = rate_json(root, &[]);
    ensure(before.assessment.result(CriterionId::C3).is_satisfied(), || {
        "clean fixture fails C3".into()
    })?;

    let mut rng = ChaCha20Rng::seed_from_u64(0x7A3);
    for id in &summary.points {
        let len = std::fs::metadata(root.join("files").join(id))
            .map_err(|e| e.to_string())?
            .len() as usize;
        tamper(root, id, rng.gen_range(0..len)).map_err(|e| e.to_string())?;
    }
    let mut invalid = 0;
    for id in &summary.points {
        let asset = crs_core::AssetRef::from_path(root.join("files").join(id)).map_err(|e| e.to_string())?;
        if inspect_provenance(&asset).status() == ValidationStatus::Invalid {
            invalid += 1;
        }
    }
    ensure(invalid == summary.points.len(), || format!("{invalid}/100 invalid"))?;

    let flags = root.join(crs_core::criteria::FLAGS_FILE);
    ensure(std::fs::read(&flags).map(|b| b.is_empty()).unwrap_or(true), || {
        "flag file not empty".into()
    })?;
    let after = rate_json(root, &[]);
    let c3 = after.assessment.result(CriterionId::C3);
    let listed: BTreeSet<&String> = c3.violating_points.iter().collect();
    let tampered: BTreeSet<&String> = summary.points.iter().collect();
    ensure(c3.status == CriterionStatus::Violated, || {
        format!("C3 is {}", c3.status)
    })?;
    ensure(listed == tampered, || {
        format!("C3 lists {} ids, {} tampered", listed.len(), tampered.len())
    })?;
    Ok(format!(
        "{invalid}/100 invalid; C3 lists exactly the {} tampered ids",
        listed.len()
    ))
}

fn admission_consistency() -> Outcome {
    const TRIALS: u64 = 50;
    let dir = tempdir()?;
    let mut admitted_total = 0;
    for seed in 0..TRIALS {
        let pool =
            build_candidate_pool(&dir.path().join(format!("pool-{seed}")), seed, 12).map_err(|e| e.to_string())?;
        let policy = p(&pool.policy_path).to_string();
        let pending = format!("{},P5Y", pool.dataset_source);
        let mut admitted = 0;
        for cand in &pool.candidates {
            let check = crs(&[
                "check-point",
                p(&cand.path),
                "--policy",
                &policy,
                "--pending-entry",
                &pending,
            ]);
            match code(&check) {
                0 => {
                    let embed = crs(&[
                        "embed",
                        p(&cand.path),
                        "--source",
                        &pool.dataset_source,
                        "--retention",
                        "P5Y",
                        "--key",
                        p(&pool.author_key_path),
                    ]);
                    ensure(code(&embed) == 0, || {
                        format!("seed {seed}: embed {}: {}", cand.id, stderr(&embed))
                    })?;
                    admitted += 1;
                }
                1 => drop_candidate(&cand.path)?,
                other => {
                    return Err(format!(
                        "seed {seed}: check-point {} exited {other}: {}",
                        cand.id,
                        stderr(&check)
                    ))
                }
            }
            ensure((code(&check) == 0) == cand.kind.admissible(), || {
                format!("seed {seed}: {} ({:?}) exited {}", cand.id, cand.kind, code(&check))
            })?;
        }
        ensure(admitted > 0, || format!("seed {seed}: nothing admitted"))?;
        let report = rate_json(&pool.root, &[]);
        for c in [CriterionId::C2, CriterionId::C3, CriterionId::C6] {
            let r = report.assessment.result(c);
            ensure(r.is_satisfied(), || {
                format!("seed {seed}: {c} {}: {}", r.status, r.evidence)
            })?;
        }
        admitted_total += admitted;
    }
    Ok(format!("{TRIALS}/{TRIALS} trials, {admitted_total} admitted points"))
}

fn drop_candidate(path: &Path) -> Result<(), String> {
    std::fs::remove_file(path).map_err(|e| e.to_string())?;
    match std::fs::remove_file(sidecar_path(path)) {
        Err(e) if e.kind() != std::io::ErrorKind::NotFound => Err(e.to_string()),
        _ => Ok(()),
    }
}

fn round_trip() -> Outcome {
    let mut signed = 0;
    for seed in 0..1000u64 {
        let m = random_manifest(seed);
        signed += usize::from(m.signature.is_some());
        let first = serialize_manifest(&m);
        let parsed = parse_manifest(&first).map_err(|e| format!("seed {seed}: {e}"))?;
        let second = serialize_manifest(&parsed);
        ensure(first == second, || format!("seed {seed}: bytes differ"))?;
        ensure(parsed == m, || format!("seed {seed}: value differs"))?;
    }
    Ok(format!("1000/1000 byte-identical ({signed} signed)"))
}

fn license_matrix() -> Outcome {
    let cases = oracle::all_cases();
    let mut dominance = 0;
    let mut permissive = 0;
    let mut propagated = 0;
    for case in &cases {
        let license: LicenseId = case.license.parse().map_err(|e| format!("{e:?}"))?;
        let consent: Consent = serde_json::from_value(case.consent.into()).map_err(|e| e.to_string())?;
        let tags = |v: &[&str]| -> Result<Vec<UseTag>, String> {
            v.iter()
                .map(|u| serde_json::from_value((*u).into()).map_err(|e| e.to_string()))
                .collect()
        };
        let allowed = case.allowed.as_deref().map(tags).transpose()?;
        let policy = DatasetPolicy {
            dataset_license: case.dataset_license.parse().map_err(|e| format!("{e:?}"))?,
            intended_uses: tags(&case.uses)?,
            requires_explicit_consent: case.explicit_consent,
            performs_derivatives: case.derivatives,
        };
        let got = check_license_compat(&license, consent, allowed.as_deref(), &policy);
        let (want, rule) = oracle::decide(case);
        let want_value = match want {
            Verdict::Ok => CompatValue::Compatible,
            Verdict::Deny => CompatValue::Incompatible,
            Verdict::Unknown => CompatValue::Inconclusive,
        };
        ensure(got.value == want_value && got.rule == rule, || {
            format!(
                "{case:?}: engine {:?}/{}, oracle {want_value:?}/{rule}",
                got.value, got.rule
            )
        })?;
        ensure(got.reason.starts_with(&format!("rule {rule}: ")), || {
            format!("{case:?}: reason {:?}", got.reason)
        })?;

        if case.consent == "denied" && case.uses.contains(&"ai-training") {
            ensure(got.value == CompatValue::Incompatible, || {
                format!("denial not dominant: {case:?}")
            })?;
            dominance += 1;
        }
        if case.license == "CC0-1.0" && case.consent == "granted" && case.allowed.is_none() {
            ensure(got.value == CompatValue::Compatible, || {
                format!("CC0 with consent refused: {case:?}")
            })?;
            permissive += 1;
        }
        let unknown_input = case.license == "UNSPECIFIED" || (case.consent == "unspecified" && case.explicit_consent);
        let denied = case.consent == "denied" && case.uses.contains(&"ai-training");
        if unknown_input && !denied {
            ensure(got.value == CompatValue::Inconclusive, || {
                format!("inconclusive lost: {case:?}")
            })?;
            propagated += 1;
        }
    }
    Ok(format!(
        "{} cases match; dominance {dominance}, CC0 permissive {permissive}, inconclusive {propagated}",
        cases.len()
    ))
}

fn trace_tamper() -> Outcome {
    const RECORDS: usize = 50;
    let start = Utc.with_ymd_and_hms(2024, 3, 1, 9, 0, 0).unwrap();
    let mut log = TraceLog::new("CHANGES.crs.jsonl");
    for i in 0..RECORDS {
        let kind = if i % 10 == 9 {
            ChangeKind::VersionReleased
        } else {
            ChangeKind::PointAdded
        };
        log.append(TraceRecord {
            recorded_at: start + chrono::Duration::hours(i as i64),
            change_kind: kind,
            affected_points: if kind == ChangeKind::VersionReleased {
                vec![]
            } else {
                vec![format!("images/img_{i:05}.png")]
            },
            description: format!("change {i}"),
            actor: "curator".into(),
        })
        .map_err(|e| e.to_string())?;
    }
    let head = log.head();
    let text = log.to_jsonl();
    ensure(validate_log_anchored(text.as_bytes(), &head).is_valid(), || {
        "pristine log rejected".into()
    })?;
    let lines: Vec<&str> = text.lines().collect();

    let mut rng = ChaCha20Rng::seed_from_u64(0x10C);
    let mut detected = 0;
    let mut detected_unanchored = 0;
    for m in 0..50 {
        let mut mutated: Vec<String> = lines.iter().map(|l| l.to_string()).collect();
        let what = match m % 3 {
            0 => {
                let k = rng.gen_range(0..RECORDS);
                mutated[k] = mutated[k].replacen(&format!("change {k}"), &format!("change {k}!"), 1);
                format!("edit line {k}")
            }
            1 => {
                // The final line is always among the deletions.
                let k = if m == 1 { RECORDS - 1 } else { rng.gen_range(0..RECORDS) };
                mutated.remove(k);
                format!("delete line {k}")
            }
            _ => {
                let k = rng.gen_range(0..RECORDS - 1);
                mutated.swap(k, k + 1);
                format!("swap lines {k} and {}", k + 1)
            }
        };
        ensure(mutated.join("\n") != lines.join("\n"), || {
            format!("{what} changed nothing")
        })?;
        let bytes = format!("{}\n", mutated.join("\n"));
        if !validate_log_anchored(bytes.as_bytes(), &head).is_valid() {
            detected += 1;
        } else {
            return Err(format!("{what} not detected"));
        }
        if !validate_log_bytes(bytes.as_bytes()).is_valid() {
            detected_unanchored += 1;
        }
    }
    Ok(format!(
        "{detected}/50 detected against the anchored head ({detected_unanchored}/50 without it)"
    ))
}

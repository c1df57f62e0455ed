use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use chrono::{DateTime, Utc};
use clap::{Parser, Subcommand, ValueEnum};

use crs_core::api;
use crs_core::corpus::{build_fixture, FixtureProfile};
use crs_core::criteria::flags::{append_flag, FlagRecord};
use crs_core::criteria::FLAGS_FILE;
use crs_core::evidence::{
    append_override, HttpProvider, InferenceProvider, OverrideStatus, ReviewOverride, CARD_FILE, KEY_TRACE_LOG_HEAD,
    OVERRIDES_FILE,
};
use crs_core::provenance::{
    embed_dataset_entry, inspect_provenance, signing::read_signing_key, write_sidecar, DatasetEntry, EmbedError,
    MediaKind, ProvenanceState, RetentionPeriod,
};
use crs_core::report::needs_review_notice;
use crs_core::tracelog::{append_record, default_log_path, validate_log, ChangeKind, TraceRecord};
use crs_core::{
    fetch_evidence, rate_dataset, rate_snapshot, AssetRef, CriterionId, DatasetPolicy, DatasetRef, FetchConfig, Letter,
    PlatformKind, RateOptions, ReportDocument,
};

mod badge;

/// Rate AI-training datasets against six compliance criteria.
#[derive(Parser)]
#[command(name = "crs", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check whether one asset may be admitted to a dataset.
    CheckPoint {
        asset: PathBuf,
        /// Dataset policy (JSON).
        #[arg(long)]
        policy: PathBuf,
        /// Dataset entry that will be embedded on admission, as SOURCE,RETENTION.
        #[arg(long, value_name = "SOURCE,RETENTION")]
        pending_entry: Option<String>,
    },
    /// Add a dataset entry to an asset's manifest and re-sign it.
    Embed {
        asset: PathBuf,
        #[arg(long)]
        source: String,
        /// ISO 8601 duration (P5Y) or end date (2030-01-01).
        #[arg(long)]
        retention: String,
        /// Hex-encoded Ed25519 signing key of the dataset author.
        #[arg(long)]
        key: PathBuf,
        /// Time of inclusion; defaults to now.
        #[arg(long)]
        at: Option<DateTime<Utc>>,
    },
    /// Rate a dataset snapshot or a hosted dataset.
    Rate {
        /// Local snapshot directory.
        #[arg(required_unless_present = "platform")]
        path: Option<PathBuf>,
        /// Fetch evidence from a hosting platform instead of a snapshot.
        #[arg(long, requires_all = ["id", "data"], conflicts_with = "path")]
        platform: Option<PlatformKind>,
        /// Dataset identifier on the platform.
        #[arg(long)]
        id: Option<String>,
        /// Local directory holding the dataset's points, flags and overrides.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Policy file; defaults to POLICY.crs.json in the data directory.
        #[arg(long)]
        policy: Option<PathBuf>,
        /// Dataset source URI used for C6 matching.
        #[arg(long)]
        source: Option<String>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        /// Also write the JSON report here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads for point checks.
        #[arg(long)]
        jobs: Option<usize>,
        /// Include per-point details in the report.
        #[arg(long)]
        points: bool,
        /// HTTP endpoint of a model-backed inference provider.
        #[arg(long)]
        provider_url: Option<String>,
    },
    /// Render an SVG badge for a score.
    Badge {
        #[arg(long, required_unless_present = "report", conflicts_with = "report")]
        score: Option<String>,
        /// Take the score from a JSON report.
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a synthetic dataset snapshot.
    GenFixtures {
        /// One of the shipped replicas.
        #[arg(long, conflicts_with = "profile", required_unless_present = "profile")]
        preset: Option<String>,
        /// Criteria to satisfy, e.g. C1,C2,C5 (empty for none).
        #[arg(long)]
        profile: Option<String>,
        #[arg(long, default_value_t = 100)]
        points: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "local")]
        platform: PlatformKind,
        #[arg(long, value_enum)]
        media: Option<Media>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Record a reviewer decision for a dataset-level criterion.
    Review {
        /// Dataset snapshot or data directory.
        path: PathBuf,
        /// CRITERION=satisfied|violated
        #[arg(long, value_name = "CRITERION=STATUS")]
        set: String,
        #[arg(long)]
        justification: String,
        #[arg(long)]
        reviewer: Option<String>,
        #[arg(long)]
        at: Option<DateTime<Utc>>,
    },
    /// Mark points as flagged in a dataset's flag file.
    Flag {
        path: PathBuf,
        /// Point ids relative to the data directory.
        #[arg(required = true)]
        ids: Vec<String>,
        #[arg(long)]
        reason: String,
    },
    /// Append to or verify a dataset's change log.
    Trace {
        #[command(subcommand)]
        action: TraceAction,
    },
}

#[derive(Subcommand)]
enum TraceAction {
    /// Append one record and refresh the head recorded in card.json.
    Append {
        path: PathBuf,
        #[arg(long, value_enum)]
        kind: Change,
        #[arg(long = "point")]
        points: Vec<String>,
        #[arg(long)]
        description: String,
        #[arg(long)]
        actor: String,
        #[arg(long)]
        at: Option<DateTime<Utc>>,
    },
    /// Check the hash chain.
    Verify { path: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Media {
    Image,
    Video,
    Audio,
}

#[derive(Clone, Copy, ValueEnum)]
enum Change {
    PointAdded,
    PointRemoved,
    DataModified,
    AnnotationModified,
    VersionReleased,
}

impl From<Change> for ChangeKind {
    fn from(c: Change) -> Self {
        match c {
            Change::PointAdded => ChangeKind::PointAdded,
            Change::PointRemoved => ChangeKind::PointRemoved,
            Change::DataModified => ChangeKind::DataModified,
            Change::AnnotationModified => ChangeKind::AnnotationModified,
            Change::VersionReleased => ChangeKind::VersionReleased,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::CheckPoint {
            asset,
            policy,
            pending_entry,
        } => check_point(&asset, &policy, pending_entry.as_deref()),
        Command::Embed {
            asset,
            source,
            retention,
            key,
            at,
        } => embed(&asset, &source, &retention, &key, at),
        Command::Rate {
            path,
            platform,
            id,
            data,
            policy,
            source,
            format,
            out,
            jobs,
            points,
            provider_url,
        } => {
            let target = match (path, platform) {
                (Some(p), _) => Target::Snapshot(p),
                (None, Some(platform)) => Target::Live {
                    platform,
                    id: id.unwrap_or_default(),
                    data: data.unwrap_or_default(),
                },
                (None, None) => unreachable!("clap requires a path or a platform"),
            };
            rate(RateArgs {
                target,
                policy,
                source,
                format,
                out,
                jobs,
                points,
                provider_url,
            })
        }
        Command::Badge { score, report, out } => badge_cmd(score.as_deref(), report.as_deref(), &out),
        Command::GenFixtures {
            preset,
            profile,
            points,
            seed,
            platform,
            media,
            out,
        } => gen_fixtures(
            preset.as_deref(),
            profile.as_deref(),
            points,
            seed,
            platform,
            media,
            &out,
        ),
        Command::Review {
            path,
            set,
            justification,
            reviewer,
            at,
        } => review(&path, &set, justification, reviewer, at),
        Command::Flag { path, ids, reason } => flag(&path, &ids, &reason),
        Command::Trace { action } => trace(action),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn check_point(asset: &Path, policy: &Path, pending: Option<&str>) -> Result<ExitCode> {
    let (source, retention) = match pending {
        Some(spec) => {
            let (s, r) = spec
                .rsplit_once(',')
                .ok_or_else(|| anyhow!("--pending-entry expects SOURCE,RETENTION"))?;
            (Some(s), Some(r))
        }
        None => (None, None),
    };
    let verdict = api::check_point(asset, policy, source, retention)?;
    println!("{}", serde_json::to_string_pretty(&verdict)?);
    Ok(if verdict.compliant {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn embed(asset: &Path, source: &str, retention: &str, key: &Path, at: Option<DateTime<Utc>>) -> Result<ExitCode> {
    let retention: RetentionPeriod = retention.parse()?;
    let key = read_signing_key(key)?;
    let asset_ref = AssetRef::from_path(asset).with_context(|| format!("cannot read {}", asset.display()))?;
    let manifest = match inspect_provenance(&asset_ref) {
        ProvenanceState::Valid(m) => m,
        ProvenanceState::Missing => return Ok(refuse("no manifest found")),
        ProvenanceState::Unparseable(e) => return Ok(refuse(&e.to_string())),
        ProvenanceState::Invalid { reason, .. } => return Ok(refuse(&reason.to_string())),
    };
    let entry = DatasetEntry::new(source, retention, at.unwrap_or_else(Utc::now));
    let next = match embed_dataset_entry(&asset_ref, &manifest, entry, &key) {
        Ok(m) => m,
        Err(EmbedError::Refused(why)) => return Ok(refuse(&why)),
        Err(e) => return Err(e.into()),
    };
    let written = write_sidecar(asset, &next)?;
    println!("embedded dataset entry for {source} into {}", written.display());
    Ok(ExitCode::SUCCESS)
}

fn refuse(why: &str) -> ExitCode {
    eprintln!("{}", EmbedError::Refused(why.to_string()));
    ExitCode::from(1)
}

enum Target {
    Snapshot(PathBuf),
    Live {
        platform: PlatformKind,
        id: String,
        data: PathBuf,
    },
}

struct RateArgs {
    target: Target,
    policy: Option<PathBuf>,
    source: Option<String>,
    format: Format,
    out: Option<PathBuf>,
    jobs: Option<usize>,
    points: bool,
    provider_url: Option<String>,
}

fn rate(args: RateArgs) -> Result<ExitCode> {
    let policy = args.policy.as_deref().map(DatasetPolicy::load).transpose()?;
    let http = args.provider_url.map(HttpProvider::new);
    let opts = RateOptions {
        policy,
        dataset_source: args.source,
        provider: http.as_ref().map(|p| p as &dyn InferenceProvider),
        jobs: args.jobs,
    };
    let rating = match &args.target {
        Target::Snapshot(root) => {
            if !root.is_dir() {
                bail!("{} is not a directory", root.display());
            }
            rate_snapshot(root, &opts)?
        }
        Target::Live { platform, id, data } => {
            let dataset = DatasetRef::new(*platform, id.clone())?;
            let evidence = fetch_evidence(&dataset, &FetchConfig::default())?;
            rate_dataset(data, evidence, &dataset.default_source(), &opts)?
        }
    };
    let report = ReportDocument::from_rating(&rating, args.points);
    report.check()?;
    if let Some(out) = &args.out {
        fs::write(out, report.to_json_pretty()).with_context(|| format!("cannot write {}", out.display()))?;
    }
    match args.format {
        Format::Text => print!("{}", report.render_text()),
        Format::Json => {
            println!("{}", report.to_json_pretty());
            let score = &report.assessment.score;
            eprintln!(
                "CRS score: {} ({} of 6 criteria satisfied)",
                score.letter, score.satisfied_count
            );
            if let Some(notice) = needs_review_notice(&report.assessment) {
                eprintln!("{notice}");
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn badge_cmd(score: Option<&str>, report: Option<&Path>, out: &Path) -> Result<ExitCode> {
    let letter = match (score, report) {
        (Some(s), _) => s.parse::<Letter>().map_err(|e| anyhow!("{e}"))?,
        (None, Some(path)) => {
            let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
            let doc = ReportDocument::from_json(&bytes).map_err(|e| anyhow!("{}: {e}", path.display()))?;
            doc.assessment.score.letter
        }
        (None, None) => bail!("pass --score or --report"),
    };
    fs::write(out, badge::render(letter)).with_context(|| format!("cannot write {}", out.display()))?;
    println!("wrote {letter} badge to {}", out.display());
    Ok(ExitCode::SUCCESS)
}

fn gen_fixtures(
    preset: Option<&str>,
    profile: Option<&str>,
    points: usize,
    seed: u64,
    platform: PlatformKind,
    media: Option<Media>,
    out: &Path,
) -> Result<ExitCode> {
    let mut fixture = match (preset, profile) {
        (Some(name), _) => FixtureProfile::preset(name).ok_or_else(|| {
            anyhow!(
                "unknown preset {name:?}; known: {}",
                crs_core::corpus::PRESETS.join(", ")
            )
        })?,
        (None, Some(spec)) => FixtureProfile::new(FixtureProfile::parse_satisfied(spec)?, points, seed, platform),
        (None, None) => bail!("pass --preset or --profile"),
    };
    if let Some(m) = media {
        fixture.media = match m {
            Media::Image => MediaKind::Image,
            Media::Video => MediaKind::Video,
            Media::Audio => MediaKind::Audio,
        };
    }
    let summary = build_fixture(&fixture, out)?;
    println!(
        "wrote {} ({} points, {} layout) to {}",
        fixture.name(),
        summary.points.len(),
        fixture.platform_layout,
        summary.root.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn review(
    path: &Path,
    set: &str,
    justification: String,
    reviewer: Option<String>,
    at: Option<DateTime<Utc>>,
) -> Result<ExitCode> {
    let (criterion, status) = set
        .split_once('=')
        .ok_or_else(|| anyhow!("--set expects CRITERION=satisfied|violated"))?;
    let criterion: CriterionId = criterion.trim().parse()?;
    let status = match status.trim() {
        "satisfied" => OverrideStatus::Satisfied,
        "violated" => OverrideStatus::Violated,
        other => bail!("unknown status {other:?}; expected satisfied or violated"),
    };
    let reviewer = reviewer
        .or_else(|| std::env::var("USER").ok())
        .filter(|r| !r.trim().is_empty())
        .unwrap_or_else(|| "unknown".into());
    let decision = ReviewOverride {
        criterion,
        status,
        justification,
        reviewer,
        decided_at: at.unwrap_or_else(Utc::now),
    };
    decision.check()?;
    if !path.is_dir() {
        bail!("{} is not a directory", path.display());
    }
    let file = path.join(OVERRIDES_FILE);
    append_override(&file, decision)?;
    println!(
        "recorded {criterion}={set_status} in {}",
        file.display(),
        set_status = status_str(status)
    );
    Ok(ExitCode::SUCCESS)
}

fn status_str(s: OverrideStatus) -> &'static str {
    match s {
        OverrideStatus::Satisfied => "satisfied",
        OverrideStatus::Violated => "violated",
    }
}

fn flag(path: &Path, ids: &[String], reason: &str) -> Result<ExitCode> {
    if reason.trim().is_empty() {
        bail!("--reason must not be empty");
    }
    let file = path.join(FLAGS_FILE);
    let now = Utc::now();
    for id in ids {
        append_flag(
            &file,
            &FlagRecord {
                asset_id: id.clone(),
                reason: reason.to_string(),
                flagged_at: now,
            },
        )?;
    }
    println!("flagged {} point(s) in {}", ids.len(), file.display());
    Ok(ExitCode::SUCCESS)
}

fn trace(action: TraceAction) -> Result<ExitCode> {
    match action {
        TraceAction::Append {
            path,
            kind,
            points,
            description,
            actor,
            at,
        } => {
            let record = TraceRecord {
                recorded_at: at.unwrap_or_else(Utc::now),
                change_kind: kind.into(),
                affected_points: points,
                description,
                actor,
            };
            let head = hex_head(append_record(&default_log_path(&path), record)?);
            let anchored = update_card_head(&path, &head)?;
            println!("log head {head}{}", if anchored { " (card.json updated)" } else { "" });
            Ok(ExitCode::SUCCESS)
        }
        TraceAction::Verify { path } => {
            let log = if path.is_dir() { default_log_path(&path) } else { path };
            let result = validate_log(&log);
            println!("{}: {result}", log.display());
            Ok(if result.is_valid() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
    }
}

fn hex_head(head: [u8; 32]) -> String {
    head.iter().map(|b| format!("{b:02x}")).collect()
}

/// Rewrites the anchored head in card.json when the card carries one.
fn update_card_head(root: &Path, head: &str) -> Result<bool> {
    let path = root.join(CARD_FILE);
    let Ok(bytes) = fs::read(&path) else {
        return Ok(false);
    };
    let mut card: serde_json::Value = serde_json::from_slice(&bytes).with_context(|| format!("{}", path.display()))?;
    let Some(slot) = card.get_mut("metadata").and_then(|m| m.get_mut(KEY_TRACE_LOG_HEAD)) else {
        return Ok(false);
    };
    *slot = serde_json::Value::String(head.to_string());
    fs::write(&path, format!("{}\n", serde_json::to_string_pretty(&card)?))?;
    Ok(true)
}

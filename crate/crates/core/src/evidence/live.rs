//! Live evidence from platform HTTP APIs.
//!
//! Requests run on at most four threads and are retried with exponential
//! backoff on rate limiting, server errors and transport failures.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Mutex, OnceLock};
use std::time::Duration;

use regex::Regex;
use serde_json::Value;

use super::{
    flatten_metadata, is_text_document, CorpusDoc, DatasetEvidence, DatasetRef, FetchConfig, FetchError,
    LocatedTraceLog, PlatformKind, CARD_FILE, KEY_TRACE_LOG,
};
use crate::tracelog::TRACE_LOG_FILE;

const MAX_DOC_BYTES: usize = 256 * 1024;

type Slot = Mutex<Option<Result<Option<Vec<u8>>, FetchError>>>;

struct Client {
    agent: ureq::Agent,
    token: Option<String>,
    attempts: u32,
    backoff: Duration,
    concurrency: usize,
}

enum Failure {
    Retry(FetchError),
    Stop(FetchError),
}

impl Client {
    fn new(config: &FetchConfig) -> Self {
        Self {
            agent: ureq::AgentBuilder::new()
                .timeout(config.timeout)
                .user_agent(concat!("crs/", env!("CARGO_PKG_VERSION")))
                .build(),
            token: config.token.clone(),
            attempts: config.max_attempts.max(1),
            backoff: config.base_backoff,
            concurrency: config.max_concurrency.clamp(1, 4),
        }
    }

    fn attempt(&self, url: &str) -> Result<Vec<u8>, Failure> {
        let mut req = self.agent.get(url);
        if let Some(t) = &self.token {
            req = req.set("Authorization", &format!("Bearer {t}"));
        }
        match req.call() {
            Ok(resp) => {
                let mut body = Vec::new();
                std::io::Read::read_to_end(&mut resp.into_reader(), &mut body).map_err(|e| {
                    Failure::Retry(FetchError::Network {
                        url: url.to_string(),
                        message: e.to_string(),
                    })
                })?;
                Ok(body)
            }
            Err(ureq::Error::Status(404, _)) => Err(Failure::Stop(FetchError::NotFound(url.to_string()))),
            Err(ureq::Error::Status(429, _)) => Err(Failure::Retry(FetchError::RateLimited {
                url: url.to_string(),
                attempts: self.attempts,
            })),
            Err(ureq::Error::Status(status, _)) if status >= 500 => Err(Failure::Retry(FetchError::Http {
                url: url.to_string(),
                status,
            })),
            Err(ureq::Error::Status(status, _)) => Err(Failure::Stop(FetchError::Http {
                url: url.to_string(),
                status,
            })),
            Err(ureq::Error::Transport(t)) => Err(Failure::Retry(FetchError::Network {
                url: url.to_string(),
                message: t.to_string(),
            })),
        }
    }

    fn get(&self, url: &str) -> Result<Vec<u8>, FetchError> {
        let mut delay = self.backoff;
        for attempt in 1..=self.attempts {
            match self.attempt(url) {
                Ok(body) => return Ok(body),
                Err(Failure::Stop(e)) => return Err(e),
                Err(Failure::Retry(e)) if attempt == self.attempts => return Err(e),
                Err(Failure::Retry(_)) => {
                    std::thread::sleep(delay);
                    delay = delay.saturating_mul(2);
                }
            }
        }
        unreachable!("at least one attempt is made")
    }

    fn get_optional(&self, url: &str) -> Result<Option<Vec<u8>>, FetchError> {
        match self.get(url) {
            Ok(b) => Ok(Some(b)),
            Err(FetchError::NotFound(_)) => Ok(None),
            Err(e) => Err(e),
        }
    }

    fn get_json(&self, url: &str) -> Result<Value, FetchError> {
        let body = self.get(url)?;
        serde_json::from_slice(&body).map_err(|e| FetchError::Malformed {
            url: url.to_string(),
            message: e.to_string(),
        })
    }

    /// Fetches all `urls` with bounded parallelism; output order matches input.
    fn get_many(&self, urls: &[String]) -> Vec<Result<Option<Vec<u8>>, FetchError>> {
        let next = AtomicUsize::new(0);
        let slots: Vec<Slot> = urls.iter().map(|_| Mutex::new(None)).collect();
        std::thread::scope(|s| {
            for _ in 0..self.concurrency.min(urls.len()) {
                s.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    let Some(url) = urls.get(i) else { break };
                    let r = self.get_optional(url);
                    *slots[i].lock().expect("slot lock") = Some(r);
                });
            }
        });
        slots
            .into_iter()
            .map(|m| m.into_inner().expect("slot lock").expect("every slot filled"))
            .collect()
    }
}

/// Fetches evidence for a platform dataset over HTTP.
pub fn fetch(dataset: &DatasetRef, config: &FetchConfig) -> Result<DatasetEvidence, FetchError> {
    dataset.validate()?;
    let client = Client::new(config);
    let mut ev = match dataset.platform {
        PlatformKind::Huggingface => huggingface(&client, dataset, config)?,
        PlatformKind::Kaggle => kaggle(&client, dataset, config)?,
        PlatformKind::Github => github(&client, dataset, config)?,
        PlatformKind::CustomUrl => custom_url(&client, dataset)?,
        PlatformKind::Local => {
            return super::snapshot::load_evidence(std::path::Path::new(&dataset.identifier), None);
        }
    };
    ev.identifier = Some(dataset.identifier.clone());
    Ok(ev)
}

/// Picks repository text files for the corpus and the trace-log path.
fn plan_files(ev: &DatasetEvidence, files: &[String], limit: usize) -> (Vec<String>, Option<String>) {
    let mut docs: Vec<String> = files.iter().filter(|f| is_text_document(f)).cloned().collect();
    docs.sort_by_key(|f| {
        (
            f.matches('/').count(),
            !f.to_ascii_lowercase().starts_with("readme"),
            f.clone(),
        )
    });
    docs.truncate(limit);
    docs.sort();
    let log = match ev.card_value(KEY_TRACE_LOG) {
        Some(p) => Some(p.trim_start_matches("./").to_string()),
        None => files.iter().find(|f| f.as_str() == TRACE_LOG_FILE).cloned(),
    };
    (docs, log)
}

fn collect_files(
    client: &Client,
    ev: &mut DatasetEvidence,
    files: &[String],
    limit: usize,
    url_for: impl Fn(&str) -> String,
) -> Result<(), FetchError> {
    let (docs, log) = plan_files(ev, files, limit);
    let mut urls: Vec<String> = docs.iter().map(|d| url_for(d)).collect();
    if let Some(l) = &log {
        urls.push(url_for(l));
    }
    let mut bodies = client.get_many(&urls).into_iter();
    for path in docs {
        if let Some(body) = bodies.next().expect("one body per url")? {
            if body.len() <= MAX_DOC_BYTES {
                ev.corpus.push(CorpusDoc {
                    path,
                    text: String::from_utf8_lossy(&body).into_owned(),
                });
            }
        }
    }
    if let Some(l) = log {
        if let Some(bytes) = bodies.next().expect("one body per url")? {
            ev.c5_tracelog = Some(LocatedTraceLog {
                source: url_for(&l),
                bytes,
                anchor: ev.trace_log_anchor(),
            });
        }
    }
    Ok(())
}

fn apply_card(ev: &mut DatasetEvidence, card: &Value, location: &str) {
    ev.card_present = true;
    if let Some(src) = card.get("dataset_source").and_then(Value::as_str) {
        ev.dataset_source = Some(src.to_string());
    }
    let metadata = card.get("metadata").or_else(|| card.get("cardData")).unwrap_or(card);
    ev.raw_metadata = flatten_metadata(metadata);
    ev.populate_from_card(location);
}

fn huggingface(client: &Client, r: &DatasetRef, config: &FetchConfig) -> Result<DatasetEvidence, FetchError> {
    let base = config.endpoints.huggingface.trim_end_matches('/');
    let api = format!("{base}/api/datasets/{}", r.identifier);
    let info = client.get_json(&api).map_err(|e| not_found_as(e, r))?;
    let mut ev = DatasetEvidence::empty(PlatformKind::Huggingface, format!("{base}/datasets/{}", r.identifier));
    if let Some(card) = info.get("cardData").filter(|c| c.is_object()) {
        apply_card(&mut ev, card, &api);
    }
    let files: Vec<String> = info
        .get("siblings")
        .and_then(Value::as_array)
        .map(|s| {
            s.iter()
                .filter_map(|f| f.get("rfilename").and_then(Value::as_str).map(str::to_owned))
                .collect()
        })
        .unwrap_or_default();
    let id = r.identifier.clone();
    collect_files(client, &mut ev, &files, config.max_corpus_files, |p| {
        format!("{base}/datasets/{id}/resolve/main/{p}")
    })?;
    Ok(ev)
}

fn kaggle(client: &Client, r: &DatasetRef, config: &FetchConfig) -> Result<DatasetEvidence, FetchError> {
    let base = config.endpoints.kaggle.trim_end_matches('/');
    let view = format!("{base}/api/v1/datasets/view/{}", r.identifier);
    let info = client.get_json(&view).map_err(|e| not_found_as(e, r))?;
    let mut ev = DatasetEvidence::empty(PlatformKind::Kaggle, format!("{base}/datasets/{}", r.identifier));
    apply_card(&mut ev, &info, &view);
    if let Some(desc) = info.get("description").and_then(Value::as_str) {
        ev.corpus.push(CorpusDoc {
            path: format!("{view}#description"),
            text: desc.to_string(),
        });
    }
    let list = client.get_json(&format!("{base}/api/v1/datasets/list/{}", r.identifier))?;
    let files: Vec<String> = list
        .get("datasetFiles")
        .and_then(Value::as_array)
        .map(|s| {
            s.iter()
                .filter_map(|f| f.get("name").and_then(Value::as_str).map(str::to_owned))
                .collect()
        })
        .unwrap_or_default();
    let id = r.identifier.clone();
    collect_files(client, &mut ev, &files, config.max_corpus_files, |p| {
        format!("{base}/api/v1/datasets/download/{id}/{p}")
    })?;
    Ok(ev)
}

fn github(client: &Client, r: &DatasetRef, config: &FetchConfig) -> Result<DatasetEvidence, FetchError> {
    let api = config.endpoints.github_api.trim_end_matches('/');
    let raw = config.endpoints.github_raw.trim_end_matches('/');
    let repo = r
        .identifier
        .trim()
        .trim_start_matches("https://github.com/")
        .trim_end_matches('/')
        .trim_end_matches(".git")
        .to_string();
    let repo_url = format!("{api}/repos/{repo}");
    let info = client.get_json(&repo_url).map_err(|e| not_found_as(e, r))?;
    let branch = info
        .get("default_branch")
        .and_then(Value::as_str)
        .unwrap_or("main")
        .to_string();
    let tree = client.get_json(&format!("{repo_url}/git/trees/{branch}?recursive=1"))?;
    let files: Vec<String> = tree
        .get("tree")
        .and_then(Value::as_array)
        .map(|t| {
            t.iter()
                .filter(|e| e.get("type").and_then(Value::as_str) == Some("blob"))
                .filter_map(|e| e.get("path").and_then(Value::as_str).map(str::to_owned))
                .collect()
        })
        .unwrap_or_default();
    let mut ev = DatasetEvidence::empty(PlatformKind::Github, format!("https://github.com/{repo}"));
    let url_for = |p: &str| format!("{raw}/{repo}/{branch}/{p}");
    if files.iter().any(|f| f == CARD_FILE) {
        if let Some(bytes) = client.get_optional(&url_for(CARD_FILE))? {
            let card: Value = serde_json::from_slice(&bytes).map_err(|e| FetchError::Malformed {
                url: url_for(CARD_FILE),
                message: e.to_string(),
            })?;
            apply_card(&mut ev, &card, &url_for(CARD_FILE));
        }
    }
    collect_files(client, &mut ev, &files, config.max_corpus_files, url_for)?;
    Ok(ev)
}

fn custom_url(client: &Client, r: &DatasetRef) -> Result<DatasetEvidence, FetchError> {
    let body = client.get(&r.identifier).map_err(|e| not_found_as(e, r))?;
    let html = String::from_utf8_lossy(&body);
    let mut ev = DatasetEvidence::empty(PlatformKind::CustomUrl, r.identifier.clone());
    ev.corpus.push(CorpusDoc {
        path: r.identifier.clone(),
        text: html_to_text(&html),
    });
    Ok(ev)
}

fn not_found_as(e: FetchError, r: &DatasetRef) -> FetchError {
    match e {
        FetchError::NotFound(_) => FetchError::NotFound(format!("{} dataset {}", r.platform, r.identifier)),
        other => other,
    }
}

/// Drops scripts, styles and tags, decodes common entities, collapses blank space.
pub(crate) fn html_to_text(html: &str) -> String {
    static BLOCKS: OnceLock<Regex> = OnceLock::new();
    static TAGS: OnceLock<Regex> = OnceLock::new();
    let blocks =
        BLOCKS.get_or_init(|| Regex::new(r"(?is)<(script|style)\b.*?</(script|style)\s*>|<!--.*?-->").unwrap());
    let tags = TAGS.get_or_init(|| Regex::new(r"(?s)<[^>]*>").unwrap());
    let text = blocks.replace_all(html, " ");
    let text = tags.replace_all(&text, " ");
    let text = text
        .replace("&nbsp;", " ")
        .replace("&lt;", "<")
        .replace("&gt;", ">")
        .replace("&quot;", "\"")
        .replace("&#39;", "'")
        .replace("&amp;", "&");
    text.lines()
        .map(|l| l.split_whitespace().collect::<Vec<_>>().join(" "))
        .filter(|l| !l.is_empty())
        .collect::<Vec<_>>()
        .join("\n")
}

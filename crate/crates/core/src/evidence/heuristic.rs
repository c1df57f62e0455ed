//! Inference providers that read repository text and suggest a verdict.
//!
//! The default [`HeuristicProvider`] scores each criterion by the fraction of
//! its documented patterns found anywhere in the corpus: all patterns
//! matched suggests `satisfied`, none suggests `violated`, anything in
//! between needs review.

use std::sync::OnceLock;
use std::time::Duration;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{CorpusDoc, EvidenceItem};
use crate::criteria::{CriterionId, CriterionStatus};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderVerdict {
    pub verdict: CriterionStatus,
    pub rationale: String,
    pub confidence: f64,
    #[serde(default)]
    pub matched: Vec<EvidenceItem>,
}

pub trait InferenceProvider: Send + Sync {
    fn name(&self) -> &str;
    fn infer(&self, criterion: CriterionId, corpus: &[CorpusDoc]) -> ProviderVerdict;
}

enum Target {
    Text,
    FileName,
}

struct Pattern {
    label: &'static str,
    target: Target,
    regex: Regex,
}

fn pattern(label: &'static str, target: Target, re: &str) -> Pattern {
    Pattern {
        label,
        target,
        regex: Regex::new(re).expect("static pattern compiles"),
    }
}

/// Documented pattern list for each dataset-level criterion.
fn patterns(criterion: CriterionId) -> &'static [Pattern] {
    static C1: OnceLock<Vec<Pattern>> = OnceLock::new();
    static C4: OnceLock<Vec<Pattern>> = OnceLock::new();
    static C5: OnceLock<Vec<Pattern>> = OnceLock::new();
    match criterion {
        CriterionId::C1 => C1.get_or_init(|| {
            vec![
                pattern("reproduction instructions", Target::Text, r"(?i)\breproduc(e|es|ed|ing|tion|ible)\b"),
                pattern(
                    "sourcing description",
                    Target::Text,
                    r"(?i)\b(sourced|sourcing|data sources?|collected from|crawl(ed|ing)?|scrap(ed|ing|er))\b",
                ),
                pattern("filtering description", Target::Text, r"(?i)\bfilter(s|ed|ing)?\b"),
                pattern("pre-processing description", Target::Text, r"(?i)\bpre-?process(ed|es|ing)?\b"),
                pattern("pipeline source code", Target::FileName, r"(?i)\.(py|sh|ipynb|rs|r|jl|js|ts)$"),
                pattern(
                    "pipeline or annotation documentation",
                    Target::Text,
                    r"(?i)\b(pipeline|annotation (process|protocol|guidelines))\b",
                ),
            ]
        }),
        CriterionId::C4 => C4.get_or_init(|| {
            vec![
                pattern("opt-out wording", Target::Text, r"(?i)\bopt[- ]?out\b"),
                pattern(
                    "removal request wording",
                    Target::Text,
                    r"(?i)\b(request(s|ing)?( the)? removal|removal requests?)\b",
                ),
                pattern(
                    "data-subject removal",
                    Target::Text,
                    r"(?i)\b(removal of (your|their) (data|content|images?|videos?|recordings?)|remove (your|their) (data|content))\b",
                ),
                pattern(
                    "contact channel",
                    Target::Text,
                    r"(?i)(mailto:|\b[a-z0-9._%+-]+@[a-z0-9-]+\.[a-z0-9.-]+\b|\bemail\b|\bcontact (form|us)\b)",
                ),
                pattern("takedown wording", Target::Text, r"(?i)\btake[- ]?down\b"),
            ]
        }),
        CriterionId::C5 => C5.get_or_init(|| {
            vec![
                pattern("change log wording", Target::Text, r"(?i)\b(change ?log|trace log|log of changes)\b"),
                pattern(
                    "version history wording",
                    Target::Text,
                    r"(?i)\b(version history|release notes|revision history)\b",
                ),
                pattern("dated entries", Target::Text, r"\b\d{4}-\d{2}-\d{2}\b"),
                pattern(
                    "change log file",
                    Target::FileName,
                    r"(?i)(^|/)(changelog|changes|history)(\.[a-z]+)?$",
                ),
            ]
        }),
        _ => &[],
    }
}

/// Deterministic keyword/pattern scorer.
#[derive(Debug, Default, Clone, Copy)]
pub struct HeuristicProvider;

impl HeuristicProvider {
    /// Labels of the patterns used for `criterion`.
    pub fn pattern_labels(criterion: CriterionId) -> Vec<&'static str> {
        patterns(criterion).iter().map(|p| p.label).collect()
    }
}

fn excerpt_around(text: &str, start: usize, end: usize) -> String {
    let mut from = start.saturating_sub(120);
    while !text.is_char_boundary(from) {
        from -= 1;
    }
    let mut to = (end + 200).min(text.len());
    while !text.is_char_boundary(to) {
        to += 1;
    }
    text[from..to].split_whitespace().collect::<Vec<_>>().join(" ")
}

impl InferenceProvider for HeuristicProvider {
    fn name(&self) -> &str {
        "heuristic"
    }

    fn infer(&self, criterion: CriterionId, corpus: &[CorpusDoc]) -> ProviderVerdict {
        let list = patterns(criterion);
        if list.is_empty() {
            return ProviderVerdict {
                verdict: CriterionStatus::NeedsReview,
                rationale: format!("{criterion} is not a dataset-level criterion"),
                confidence: 0.0,
                matched: Vec::new(),
            };
        }
        let mut matched = Vec::new();
        let mut labels = Vec::new();
        for p in list {
            let hit = corpus.iter().find_map(|doc| match p.target {
                Target::Text => p
                    .regex
                    .find(&doc.text)
                    .map(|m| EvidenceItem::new(doc.path.clone(), excerpt_around(&doc.text, m.start(), m.end()))),
                Target::FileName => p
                    .regex
                    .is_match(&doc.path)
                    .then(|| EvidenceItem::new(doc.path.clone(), format!("file {}", doc.path))),
            });
            if let Some(item) = hit {
                matched.push(item);
                labels.push(p.label);
            }
        }
        let confidence = matched.len() as f64 / list.len() as f64;
        let verdict = if matched.len() == list.len() {
            CriterionStatus::Satisfied
        } else if matched.is_empty() {
            CriterionStatus::Violated
        } else {
            CriterionStatus::NeedsReview
        };
        let rationale = if labels.is_empty() {
            format!(
                "none of {} {criterion} patterns found in {} documents",
                list.len(),
                corpus.len()
            )
        } else {
            format!(
                "{} of {} {criterion} patterns found ({})",
                labels.len(),
                list.len(),
                labels.join(", ")
            )
        };
        ProviderVerdict {
            verdict,
            rationale,
            confidence,
            matched,
        }
    }
}

/// Delegates to a remote service (for instance a language-model front end).
///
/// Request: `POST <endpoint>` with `{"criterion": "C4", "documents": [{"path", "text"}]}`.
/// Response: `{"verdict": "satisfied"|"violated"|"needs-review", "rationale": "...", "confidence": 0.7}`.
/// Any transport or decoding failure yields a zero-confidence needs-review verdict.
pub struct HttpProvider {
    endpoint: String,
    agent: ureq::Agent,
    max_doc_chars: usize,
}

impl HttpProvider {
    pub fn new(endpoint: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            agent: ureq::AgentBuilder::new().timeout(Duration::from_secs(60)).build(),
            max_doc_chars: 20_000,
        }
    }
}

#[derive(Serialize)]
struct ProviderRequest<'a> {
    criterion: CriterionId,
    documents: Vec<ProviderDoc<'a>>,
}

#[derive(Serialize)]
struct ProviderDoc<'a> {
    path: &'a str,
    text: String,
}

impl InferenceProvider for HttpProvider {
    fn name(&self) -> &str {
        &self.endpoint
    }

    fn infer(&self, criterion: CriterionId, corpus: &[CorpusDoc]) -> ProviderVerdict {
        let body = ProviderRequest {
            criterion,
            documents: corpus
                .iter()
                .map(|d| ProviderDoc {
                    path: &d.path,
                    text: d.text.chars().take(self.max_doc_chars).collect(),
                })
                .collect(),
        };
        let response = self
            .agent
            .post(&self.endpoint)
            .send_json(&body)
            .map_err(|e| e.to_string())
            .and_then(|r| r.into_json::<ProviderVerdict>().map_err(|e| e.to_string()));
        match response {
            Ok(mut v) => {
                v.confidence = v.confidence.clamp(0.0, 1.0);
                v
            }
            Err(e) => ProviderVerdict {
                verdict: CriterionStatus::NeedsReview,
                rationale: format!("inference provider unavailable: {e}"),
                confidence: 0.0,
                matched: Vec::new(),
            },
        }
    }
}

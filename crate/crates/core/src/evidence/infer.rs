//! Preliminary verdicts for C1, C4 and C5.
//!
//! Card keys decide directly on platforms with standardized metadata. Where
//! no key exists, the inference provider reads the repository text; on
//! GitHub and custom sites its verdict is always demoted to needs-review.
//! C5 additionally requires a trace log that exists and verifies.

use super::{
    DatasetEvidence, EvidenceItem, InferenceProvider, KEY_OPT_OUT, KEY_REPRODUCIBILITY, KEY_TRACE_LOG,
    KEY_TRACE_LOG_HEAD,
};
use crate::criteria::{CriterionId, CriterionResult, CriterionStatus};
use crate::tracelog::{validate_log_anchored, validate_log_bytes, LogValidation};

/// Returns results for C1, C4 and C5, in that order.
pub fn infer_dataset_criteria(evidence: &DatasetEvidence, provider: &dyn InferenceProvider) -> Vec<CriterionResult> {
    vec![
        infer_c1(evidence, provider),
        infer_c4(evidence, provider),
        infer_c5(evidence, provider),
    ]
}

fn card_source(ev: &DatasetEvidence, key: &str) -> String {
    format!("{}#{key}", ev.location)
}

fn infer_c1(ev: &DatasetEvidence, provider: &dyn InferenceProvider) -> CriterionResult {
    let c = CriterionId::C1;
    if ev.uses_card_keys() {
        if let Some(value) = ev.card_value(KEY_REPRODUCIBILITY) {
            let mut r = if value.trim().is_empty() {
                CriterionResult::new(
                    c,
                    CriterionStatus::Violated,
                    format!("card key {KEY_REPRODUCIBILITY} is empty"),
                )
            } else {
                CriterionResult::new(
                    c,
                    CriterionStatus::Satisfied,
                    format!("card key {KEY_REPRODUCIBILITY} documents sourcing and processing"),
                )
            };
            r.sources = if ev.c1_docs.is_empty() {
                vec![EvidenceItem::new(card_source(ev, KEY_REPRODUCIBILITY), value)]
            } else {
                ev.c1_docs.clone()
            };
            return r;
        }
    }
    from_provider(ev, provider, c, KEY_REPRODUCIBILITY)
}

/// A contact URI: `mailto:` with an address, or an http(s) URL.
fn is_contact_uri(value: &str) -> bool {
    let v = value.trim();
    if let Some(addr) = v.strip_prefix("mailto:") {
        let addr = addr.split('?').next().unwrap_or("");
        return addr
            .split_once('@')
            .is_some_and(|(user, host)| !user.is_empty() && host.contains('.') && !host.contains(char::is_whitespace));
    }
    ["https://", "http://"].iter().any(|scheme| {
        v.strip_prefix(scheme)
            .is_some_and(|rest| !rest.is_empty() && !rest.contains(char::is_whitespace))
    })
}

fn infer_c4(ev: &DatasetEvidence, provider: &dyn InferenceProvider) -> CriterionResult {
    let c = CriterionId::C4;
    if ev.uses_card_keys() {
        if let Some(value) = ev.card_value(KEY_OPT_OUT) {
            let mut r = if is_contact_uri(value) {
                CriterionResult::new(
                    c,
                    CriterionStatus::Satisfied,
                    format!("card key {KEY_OPT_OUT} names an opt-out contact"),
                )
            } else {
                CriterionResult::new(
                    c,
                    CriterionStatus::Violated,
                    format!("card key {KEY_OPT_OUT} is not a contact URI (expected mailto: or http(s) URL)"),
                )
            };
            r.sources = vec![ev
                .c4_optout
                .clone()
                .unwrap_or_else(|| EvidenceItem::new(card_source(ev, KEY_OPT_OUT), value))];
            return r;
        }
    }
    from_provider(ev, provider, c, KEY_OPT_OUT)
}

fn infer_c5(ev: &DatasetEvidence, provider: &dyn InferenceProvider) -> CriterionResult {
    let c = CriterionId::C5;
    if let Some(log) = &ev.c5_tracelog {
        let declared_anchor = ev.card_value(KEY_TRACE_LOG_HEAD);
        let validation = match (&log.anchor, declared_anchor) {
            (Some(head), _) => validate_log_anchored(&log.bytes, head),
            (None, Some(_)) => {
                LogValidation::Invalid(format!("card key {KEY_TRACE_LOG_HEAD} is not a 64-digit hex hash"))
            }
            (None, None) => validate_log_bytes(&log.bytes),
        };
        let excerpt: String = String::from_utf8_lossy(&log.bytes)
            .lines()
            .last()
            .unwrap_or("")
            .to_string();
        let mut r = match validation {
            LogValidation::Invalid(reason) => {
                CriterionResult::new(c, CriterionStatus::Violated, format!("trace log invalid: {reason}"))
            }
            LogValidation::Valid { records: 0, .. } => {
                CriterionResult::new(c, CriterionStatus::Violated, "trace log is empty; no dated records")
            }
            LogValidation::Valid { records, head } => {
                let anchored = if log.anchor.is_some() {
                    ", head matches the card"
                } else {
                    ""
                };
                let base = format!(
                    "trace log valid: {records} dated records, chain head {}{anchored}",
                    hex::encode(head)
                );
                if ev.platform.requires_review() {
                    CriterionResult::new(
                        c,
                        CriterionStatus::NeedsReview,
                        format!("{base}; {} platforms need review", ev.platform),
                    )
                } else {
                    CriterionResult::new(c, CriterionStatus::Satisfied, base)
                }
            }
        };
        r.sources = vec![EvidenceItem::new(log.source.clone(), excerpt)];
        return r;
    }
    if let Some(rel) = ev.card_value(KEY_TRACE_LOG) {
        let mut r = CriterionResult::new(
            c,
            CriterionStatus::Violated,
            format!("card key {KEY_TRACE_LOG} points to {rel:?}, which does not exist"),
        );
        r.sources = vec![EvidenceItem::new(card_source(ev, KEY_TRACE_LOG), rel)];
        return r;
    }
    let mut r = from_provider(ev, provider, c, KEY_TRACE_LOG);
    if r.status == CriterionStatus::Satisfied {
        r.status = CriterionStatus::NeedsReview;
        r.evidence
            .push_str("; no machine-readable trace log found, so the change history needs review");
    }
    r
}

fn from_provider(
    ev: &DatasetEvidence,
    provider: &dyn InferenceProvider,
    c: CriterionId,
    card_key: &str,
) -> CriterionResult {
    let v = provider.infer(c, &ev.corpus);
    let lead = if ev.uses_card_keys() {
        format!("card key {card_key} absent; ")
    } else {
        String::new()
    };
    let mut evidence = format!(
        "{lead}{} provider: {} (confidence {:.2})",
        provider.name(),
        v.rationale,
        v.confidence
    );
    let mut status = v.verdict;
    if ev.platform.requires_review() && status != CriterionStatus::NeedsReview {
        evidence.push_str(&format!(
            "; provider suggested {status}, but {} datasets lack standardized metadata and need review",
            ev.platform
        ));
        status = CriterionStatus::NeedsReview;
    }
    let mut r = CriterionResult::new(c, status, evidence);
    r.sources = v.matched;
    if r.sources.is_empty() && status != CriterionStatus::NeedsReview {
        let scanned = if ev.corpus.is_empty() {
            "no repository documents found".to_string()
        } else {
            let names: Vec<&str> = ev.corpus.iter().map(|d| d.path.as_str()).collect();
            format!("scanned: {}", names.join(", "))
        };
        r.sources.push(EvidenceItem::new(ev.location.clone(), scanned));
    }
    r
}

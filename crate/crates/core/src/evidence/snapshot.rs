//! Offline evidence from a snapshot directory.

use std::path::{Component, Path};

use walkdir::WalkDir;

use super::{
    flatten_metadata, is_text_document, CorpusDoc, DatasetEvidence, FetchError, LocatedTraceLog, PlatformKind,
    CARD_FILE, KEY_TRACE_LOG,
};
use crate::tracelog::TRACE_LOG_FILE;

/// Largest text file read into the corpus.
const MAX_DOC_BYTES: u64 = 256 * 1024;

pub const FILES_DIR: &str = "files";

/// Reads evidence from `root`. `platform` overrides the one the card declares.
pub fn load_evidence(root: &Path, platform: Option<PlatformKind>) -> Result<DatasetEvidence, FetchError> {
    if !root.is_dir() {
        return Err(FetchError::NotFound(root.display().to_string()));
    }
    let mut ev = DatasetEvidence::empty(platform.unwrap_or(PlatformKind::Local), root.display().to_string());

    let card_path = root.join(CARD_FILE);
    if card_path.is_file() {
        let bytes = std::fs::read(&card_path)?;
        let card: serde_json::Value = serde_json::from_slice(&bytes).map_err(|e| FetchError::Malformed {
            url: card_path.display().to_string(),
            message: e.to_string(),
        })?;
        ev.card_present = true;
        if platform.is_none() {
            if let Some(p) = card.get("platform").and_then(|p| p.as_str()) {
                ev.platform = p.parse().map_err(|message| FetchError::Malformed {
                    url: card_path.display().to_string(),
                    message,
                })?;
            }
        }
        ev.identifier = card.get("identifier").and_then(|v| v.as_str()).map(str::to_owned);
        ev.dataset_source = card.get("dataset_source").and_then(|v| v.as_str()).map(str::to_owned);
        let metadata = card.get("metadata").or_else(|| card.get("cardData")).unwrap_or(&card);
        ev.raw_metadata = flatten_metadata(metadata);
        ev.populate_from_card(CARD_FILE);
    }

    ev.corpus = read_corpus(root)?;

    let log_rel = ev.card_value(KEY_TRACE_LOG).map(str::to_owned);
    let log_path = match &log_rel {
        Some(rel) if is_safe_relative(rel) => Some(root.join(rel)),
        Some(_) => None,
        None => Some(root.join(TRACE_LOG_FILE)),
    };
    if let Some(path) = log_path.filter(|p| p.is_file()) {
        ev.c5_tracelog = Some(LocatedTraceLog {
            source: path.display().to_string(),
            bytes: std::fs::read(&path)?,
            anchor: ev.trace_log_anchor(),
        });
    }
    Ok(ev)
}

fn is_safe_relative(rel: &str) -> bool {
    let p = Path::new(rel);
    !rel.is_empty() && p.components().all(|c| matches!(c, Component::Normal(_)))
}

/// Root-level README plus every text document under `files/`, sorted by path.
fn read_corpus(root: &Path) -> Result<Vec<CorpusDoc>, FetchError> {
    let mut docs = Vec::new();
    for name in ["README.md", "README", "README.txt"] {
        let p = root.join(name);
        if p.is_file() {
            docs.push(CorpusDoc {
                path: name.to_string(),
                text: read_text(&p)?,
            });
        }
    }
    let files = root.join(FILES_DIR);
    if files.is_dir() {
        for entry in WalkDir::new(&files).sort_by_file_name() {
            let entry = entry.map_err(|e| FetchError::Io(e.into()))?;
            if !entry.file_type().is_file() {
                continue;
            }
            let rel = entry
                .path()
                .strip_prefix(root)
                .expect("walk stays under root")
                .to_string_lossy()
                .replace('\\', "/");
            if is_text_document(&rel) && entry.metadata().map_err(|e| FetchError::Io(e.into()))?.len() <= MAX_DOC_BYTES
            {
                docs.push(CorpusDoc {
                    path: rel,
                    text: read_text(entry.path())?,
                });
            }
        }
    }
    Ok(docs)
}

fn read_text(path: &Path) -> Result<String, FetchError> {
    let bytes = std::fs::read(path)?;
    Ok(String::from_utf8_lossy(&bytes).into_owned())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evidence::{KEY_OPT_OUT, KEY_REPRODUCIBILITY};

    #[test]
    fn empty_directory_has_no_evidence() {
        let dir = tempfile::tempdir().unwrap();
        let ev = load_evidence(dir.path(), None).unwrap();
        assert!(!ev.card_present);
        assert!(ev.c1_docs.is_empty() && ev.c4_optout.is_none() && ev.c5_tracelog.is_none());
        assert!(ev.raw_metadata.is_empty() && ev.corpus.is_empty());
        assert_eq!(ev.platform, PlatformKind::Local);
    }

    #[test]
    fn card_keys_populate_evidence() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join(CARD_FILE),
            serde_json::json!({
                "platform": "huggingface",
                "metadata": {
                    KEY_REPRODUCIBILITY: "https://example.org/pipeline",
                    KEY_OPT_OUT: "mailto:optout@example.org"
                }
            })
            .to_string(),
        )
        .unwrap();
        let ev = load_evidence(dir.path(), None).unwrap();
        assert_eq!(ev.platform, PlatformKind::Huggingface);
        assert_eq!(ev.c1_docs.len(), 1);
        assert_eq!(ev.c4_optout.as_ref().unwrap().excerpt, "mailto:optout@example.org");
        assert!(ev.c4_optout.as_ref().unwrap().source.ends_with("#crs.opt_out"));
    }

    #[test]
    fn default_trace_log_located() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join(TRACE_LOG_FILE), b"").unwrap();
        let ev = load_evidence(dir.path(), None).unwrap();
        assert!(ev.c5_tracelog.is_some());
    }

    #[test]
    fn escaping_trace_log_path_ignored() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join(CARD_FILE),
            serde_json::json!({"metadata": {KEY_TRACE_LOG: "../outside.jsonl"}}).to_string(),
        )
        .unwrap();
        let ev = load_evidence(dir.path(), None).unwrap();
        assert!(ev.c5_tracelog.is_none());
    }

    #[test]
    fn missing_root_is_not_found() {
        assert!(matches!(
            load_evidence(Path::new("/nonexistent/snapshot"), None),
            Err(FetchError::NotFound(_))
        ));
    }

    #[test]
    fn corpus_includes_files_text_only() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::create_dir_all(dir.path().join("files/pipeline")).unwrap();
        std::fs::write(dir.path().join("files/README.md"), "hello").unwrap();
        std::fs::write(dir.path().join("files/pipeline/collect.py"), "print(1)").unwrap();
        std::fs::write(dir.path().join("files/a.png"), b"\x89PNG").unwrap();
        let ev = load_evidence(dir.path(), None).unwrap();
        let paths: Vec<_> = ev.corpus.iter().map(|d| d.path.as_str()).collect();
        assert_eq!(paths, vec!["files/README.md", "files/pipeline/collect.py"]);
    }
}
